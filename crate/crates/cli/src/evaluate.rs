//! `evaluate`: aggregate result files into a per-method report.

use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use deepmapping::pipeline::{evaluate_suite, RegistrationResult};

use crate::{CliError, CliResult};

#[derive(Args, Serialize)]
pub struct EvaluateArgs {
    /// Result JSON files, or directories searched for *.json.
    #[arg(value_name = "RESULTS", required = true)]
    results: Vec<PathBuf>,
    /// Success threshold as a fraction of the world width.
    #[arg(long, default_value_t = 0.02)]
    ate_threshold_frac: f64,
    /// World width in pixels, used to resolve the fractional threshold.
    #[arg(long, default_value_t = 256.0)]
    world_width: f64,
    /// Absolute ATE success threshold in pixels; overrides the fraction.
    #[arg(long)]
    ate_threshold: Option<f64>,
    /// Also write the report to this CSV file.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

/// The wrapper `register` writes; unknown fields such as `metadata` are
/// ignored on read.
#[derive(Deserialize)]
struct ResultDoc {
    result: RegistrationResult,
}

fn collect_files(paths: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    let mut files = Vec::new();
    for path in paths {
        let stat = std::fs::metadata(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        if stat.is_dir() {
            for entry in std::fs::read_dir(path)? {
                let p = entry?.path();
                if p.extension().is_some_and(|e| e == "json") {
                    files.push(p);
                }
            }
        } else {
            files.push(path.clone());
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(CliError::Input(format!(
            "no result files found in {}",
            paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", ")
        )));
    }
    Ok(files)
}

pub fn run(args: EvaluateArgs) -> CliResult<()> {
    let files = collect_files(&args.results)?;
    let mut results = Vec::with_capacity(files.len());
    for file in &files {
        let text = std::fs::read_to_string(file)
            .map_err(|e| CliError::Input(format!("{}: {e}", file.display())))?;
        let doc: ResultDoc = serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("parse error in {}: {e}", file.display())))?;
        if doc.result.metrics.is_none() {
            eprintln!(
                "warning: {}: no ground-truth metrics; excluded from the report",
                file.display()
            );
        }
        results.push(doc.result);
    }

    let threshold =
        args.ate_threshold.unwrap_or(args.ate_threshold_frac * args.world_width);
    let reports = evaluate_suite(&results, threshold)?;

    let meta = serde_json::to_string(&serde_json::json!({
        "command": "evaluate",
        "flags": &args,
        "resolved_ate_threshold": threshold,
    }))?;
    let mut table = format!("# {meta}\n");
    table.push_str(
        "method,runs,median_ate,q1_ate,q3_ate,median_point_distance,success_rate,mean_wall_time\n",
    );
    for r in &reports {
        table.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.method,
            r.runs,
            r.median_ate,
            r.q1_ate,
            r.q3_ate,
            r.median_point_distance,
            r.success_rate,
            r.mean_wall_time
        ));
    }
    print!("{table}");
    if let Some(out) = &args.out {
        std::fs::write(out, &table)?;
    }
    Ok(())
}
