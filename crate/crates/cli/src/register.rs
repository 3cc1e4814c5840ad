//! `register`: run one registration method on a dataset and write the
//! result document, per-epoch traces, the registered cloud, and (for the
//! network method) the learned occupancy map.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Serialize;

use deepmapping::geometry::transform_points;
use deepmapping::model::{explored_mask, rasterize_map, LNetVariant, MNet};
use deepmapping::pipeline::{
    networks_from_snapshot, run_deepmapping, run_direct_opt, run_icp, RegistrationResult,
    RunConfig, Variant, WarmStart,
};
use deepmapping::simulator::{load_dataset, write_pgm_image_commented, SimDataset};

use crate::meta::{metadata_line, metadata_value};
use crate::{CliError, CliResult};

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Deepmapping,
    Direct,
    IcpPoint,
    IcpPlane,
}

impl From<MethodArg> for Variant {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Deepmapping => Variant::Deepmapping,
            MethodArg::Direct => Variant::Direct,
            MethodArg::IcpPoint => Variant::IcpPoint,
            MethodArg::IcpPlane => Variant::IcpPlane,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum WarmStartArg {
    None,
    IcpPoint,
    IcpPlane,
}

impl From<WarmStartArg> for WarmStart {
    fn from(w: WarmStartArg) -> Self {
        match w {
            WarmStartArg::None => WarmStart::None,
            WarmStartArg::IcpPoint => WarmStart::IcpPoint,
            WarmStartArg::IcpPlane => WarmStart::IcpPlane,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LNetVariantArg {
    Conv,
    Pointwise,
}

impl From<LNetVariantArg> for LNetVariant {
    fn from(v: LNetVariantArg) -> Self {
        match v {
            LNetVariantArg::Conv => LNetVariant::Conv,
            LNetVariantArg::Pointwise => LNetVariant::Pointwise,
        }
    }
}

#[derive(Args)]
pub struct RegisterArgs {
    /// Dataset JSON produced by `simulate`.
    #[arg(value_name = "DATASET")]
    dataset: PathBuf,
    /// Directory that receives result.json, loss.csv, registered.csv, and
    /// map.pgm.
    #[arg(value_name = "OUT_DIR")]
    out_dir: PathBuf,
    /// Registration method.
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Coarse ICP initialization composed under the gradient refinement.
    #[arg(long, value_enum)]
    warm_start: Option<WarmStartArg>,
    /// JSON file with run-config fields; explicit flags override its values.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Training epochs.
    #[arg(long)]
    epochs: Option<usize>,
    /// Adam learning rate.
    #[arg(long)]
    lr: Option<f64>,
    /// Scans per optimization chunk (one parameter update per chunk).
    #[arg(long)]
    batch: Option<usize>,
    /// Weight of the pairwise alignment term of the loss.
    #[arg(long)]
    lambda: Option<f64>,
    /// Free-space samples per beam.
    #[arg(long)]
    samples_per_ray: Option<usize>,
    /// Pair each scan with this many neighbors on each side.
    #[arg(long)]
    neighbor_window: Option<usize>,
    /// Seed for network initialization and free-space sampling.
    #[arg(long)]
    seed: Option<u64>,
    /// Divisor applied to scan coordinates before they enter the networks;
    /// resolved from the data when omitted.
    #[arg(long)]
    coord_scale: Option<f64>,
    /// Localization feature extractor.
    #[arg(long, value_enum)]
    lnet_variant: Option<LNetVariantArg>,
    /// Feature-extractor channel widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    lnet_features: Option<Vec<usize>>,
    /// Pose-head layer widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    lnet_head: Option<Vec<usize>>,
    /// Convolution kernel size of the localization network.
    #[arg(long)]
    lnet_kernel: Option<usize>,
    /// Convolution dilation of the localization network.
    #[arg(long)]
    lnet_dilation: Option<usize>,
    /// Occupancy network hidden widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    mnet_hidden: Option<Vec<usize>>,
    /// ICP iteration cap (pairwise runs and warm starts).
    #[arg(long)]
    icp_max_iter: Option<usize>,
    /// ICP convergence tolerance on the pose increment.
    #[arg(long)]
    icp_tol: Option<f64>,
    /// Occupancy map resolution in pixels (square image).
    #[arg(long, default_value_t = 256)]
    map_size: usize,
    /// Margin around the registered cloud in world pixels.
    #[arg(long, default_value_t = 8.0)]
    map_margin: f64,
    /// Cells within this many world pixels of a sampled ray point render as
    /// explored.
    #[arg(long, default_value_t = 2.0)]
    map_explored_radius: f64,
}

/// The fully resolved invocation, echoed into every output file.
#[derive(Serialize)]
struct ResolvedRegister<'a> {
    dataset: &'a Path,
    out_dir: &'a Path,
    config_file: Option<&'a Path>,
    config: &'a RunConfig,
    map_size: usize,
    map_margin: f64,
    map_explored_radius: f64,
}

fn resolve_config(args: &RegisterArgs) -> CliResult<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<RunConfig>(&text)
                .map_err(|e| CliError::Input(format!("parse error in {}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    cfg.variant = args.method.into();
    if let Some(v) = args.warm_start {
        cfg.warm_start = v.into();
    }
    if let Some(v) = args.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = args.lr {
        cfg.lr = v;
    }
    if let Some(v) = args.batch {
        cfg.batch_size = v;
    }
    if let Some(v) = args.lambda {
        cfg.lambda = v;
    }
    if let Some(v) = args.samples_per_ray {
        cfg.samples_per_ray = v;
    }
    if let Some(v) = args.neighbor_window {
        cfg.neighbor_window = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.coord_scale {
        cfg.coord_scale = Some(v);
    }
    if let Some(v) = args.lnet_variant {
        cfg.lnet_variant = v.into();
    }
    if let Some(v) = &args.lnet_features {
        cfg.lnet_features = v.clone();
    }
    if let Some(v) = &args.lnet_head {
        cfg.lnet_head = v.clone();
    }
    if let Some(v) = args.lnet_kernel {
        cfg.lnet_kernel = v;
    }
    if let Some(v) = args.lnet_dilation {
        cfg.lnet_dilation = v;
    }
    if let Some(v) = &args.mnet_hidden {
        cfg.mnet_hidden = v.clone();
    }
    if let Some(v) = args.icp_max_iter {
        cfg.icp_max_iter = v;
    }
    if let Some(v) = args.icp_tol {
        cfg.icp_tol = v;
    }
    Ok(cfg)
}

pub fn run(args: RegisterArgs) -> CliResult<()> {
    let mut cfg = resolve_config(&args)?;
    cfg.validate()?;
    let dataset = load_dataset(&args.dataset)?;

    // Keep the trained parameters so the learned map can be rendered.
    let wants_map = cfg.variant == Variant::Deepmapping;
    if wants_map && !cfg.log_param_epochs.contains(&cfg.epochs) {
        cfg.log_param_epochs.push(cfg.epochs);
    }

    let result = match cfg.variant {
        Variant::Deepmapping => run_deepmapping(&dataset, &cfg)?,
        Variant::Direct => run_direct_opt(&dataset, &cfg)?,
        Variant::IcpPoint | Variant::IcpPlane => run_icp(&dataset, &cfg)?,
    };

    std::fs::create_dir_all(&args.out_dir)?;
    let resolved = ResolvedRegister {
        dataset: &args.dataset,
        out_dir: &args.out_dir,
        config_file: args.config.as_deref(),
        config: &result.config,
        map_size: args.map_size,
        map_margin: args.map_margin,
        map_explored_radius: args.map_explored_radius,
    };
    let meta = metadata_line("register", &resolved);

    let doc = serde_json::json!({
        "metadata": metadata_value("register", &resolved),
        "result": &result,
    });
    std::fs::write(args.out_dir.join("result.json"), serde_json::to_string_pretty(&doc)?)?;

    write_loss_csv(&args.out_dir.join("loss.csv"), &result, &meta)?;
    let clouds = registered_clouds(&result, &dataset);
    write_registered_csv(&args.out_dir.join("registered.csv"), &clouds, &meta)?;

    if wants_map {
        let snap = result
            .param_snapshots
            .iter()
            .find(|s| s.epoch == cfg.epochs)
            .ok_or_else(|| CliError::Input("trained parameter snapshot missing".into()))?;
        let (_lnet, mnet) = networks_from_snapshot(&result.config, snap)?;
        render_map(&args, &result, &clouds, &mnet, &meta)?;
    }

    match &result.metrics {
        Some(m) => println!(
            "{}: ate {:.3} px, point distance {:.3} px, {:.1} s -> {}",
            result.method_label(),
            m.ate,
            m.point_distance,
            result.wall_time,
            args.out_dir.display()
        ),
        None => println!(
            "{}: no ground truth, {:.1} s -> {}",
            result.method_label(),
            result.wall_time,
            args.out_dir.display()
        ),
    }
    Ok(())
}

fn write_loss_csv(path: &Path, result: &RegistrationResult, meta: &str) -> CliResult<()> {
    let mut csv = format!("# {meta}\nepoch,loss,ate\n");
    for (epoch, loss) in result.loss_trace.iter().enumerate() {
        let ate = result.ate_trace.get(epoch).map(f64::to_string).unwrap_or_default();
        csv.push_str(&format!("{epoch},{loss},{ate}\n"));
    }
    std::fs::write(path, csv)?;
    Ok(())
}

fn registered_clouds(result: &RegistrationResult, dataset: &SimDataset) -> Vec<Vec<[f64; 2]>> {
    result
        .estimated_poses
        .iter()
        .zip(&dataset.frames)
        .map(|(pose, frame)| transform_points(pose, &frame.points))
        .collect()
}

fn write_registered_csv(path: &Path, clouds: &[Vec<[f64; 2]>], meta: &str) -> CliResult<()> {
    let mut csv = format!("# {meta}\nscan,x,y\n");
    for (index, cloud) in clouds.iter().enumerate() {
        for p in cloud {
            csv.push_str(&format!("{index},{},{}\n", p[0], p[1]));
        }
    }
    std::fs::write(path, csv)?;
    Ok(())
}

/// Render the learned occupancy field over the registered cloud's bounding
/// square. Cells near deterministic samples along the estimated beams count
/// as explored; everything else stays gray.
fn render_map(
    args: &RegisterArgs,
    result: &RegistrationResult,
    clouds: &[Vec<[f64; 2]>],
    mnet: &MNet,
    meta: &str,
) -> CliResult<()> {
    let step = args.map_explored_radius.max(0.5);
    let mut samples: Vec<[f64; 2]> = Vec::new();
    let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
    let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (pose, cloud) in result.estimated_poses.iter().zip(clouds) {
        let origin = pose.translation();
        for p in cloud {
            min_x = min_x.min(p[0]);
            min_y = min_y.min(p[1]);
            max_x = max_x.max(p[0]);
            max_y = max_y.max(p[1]);
            let (dx, dy) = (p[0] - origin[0], p[1] - origin[1]);
            let len = (dx * dx + dy * dy).sqrt();
            let segments = (len / step).floor() as usize;
            samples.push(*p);
            for j in 0..segments {
                let t = j as f64 * step / len;
                samples.push([origin[0] + t * dx, origin[1] + t * dy]);
            }
        }
    }
    if !(min_x.is_finite() && min_y.is_finite() && max_x.is_finite() && max_y.is_finite()) {
        return Err(CliError::Input("registered cloud is empty".into()));
    }

    let cx = 0.5 * (min_x + max_x);
    let cy = 0.5 * (min_y + max_y);
    let half = 0.5 * (max_x - min_x).max(max_y - min_y) + args.map_margin;
    let scale = result.coord_scale;
    let bounds = [
        (cx - half) / scale,
        (cy - half) / scale,
        (cx + half) / scale,
        (cy + half) / scale,
    ];
    let scaled: Vec<[f64; 2]> = samples.iter().map(|p| [p[0] / scale, p[1] / scale]).collect();
    let mask = explored_mask(
        bounds,
        args.map_size,
        args.map_size,
        &[&scaled],
        args.map_explored_radius / scale,
    );
    let map = rasterize_map(mnet, bounds, args.map_size, args.map_size, &mask)?;
    write_pgm_image_commented(
        &args.out_dir.join("map.pgm"),
        map.width,
        map.height,
        &map.pixels,
        &[meta],
    )?;
    Ok(())
}
