//! `simulate`: render a random world and a scan dataset into a directory.

use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use deepmapping::pipeline::derive_seed;
use deepmapping::simulator::{
    generate_world, simulate_dataset, write_pgm_image_commented, SensorConfig,
};

use crate::meta::{metadata_line, metadata_value};
use crate::{CliError, CliResult};

#[derive(Args, Serialize)]
pub struct SimulateArgs {
    /// Directory that receives world.pgm and dataset.json.
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
    /// World width in pixels.
    #[arg(long, default_value_t = 256)]
    pub width: usize,
    /// World height in pixels.
    #[arg(long, default_value_t = 256)]
    pub height: usize,
    /// Number of random rectangle and disc obstacles.
    #[arg(long, default_value_t = 8)]
    pub obstacles: usize,
    /// Number of poses along the random-walk trajectory.
    #[arg(long, default_value_t = 32)]
    pub poses: usize,
    /// Beams per scan.
    #[arg(long, default_value_t = 128)]
    pub beams: usize,
    /// Sensor field of view in degrees.
    #[arg(long, default_value_t = 360.0)]
    pub fov_deg: f64,
    /// Maximum sensing range in pixels (unlimited when omitted).
    #[arg(long)]
    pub max_range: Option<f64>,
    /// Largest per-step heading change in degrees.
    #[arg(long, default_value_t = 10.0)]
    pub rot_max_deg: f64,
    /// Mean per-step translation in pixels.
    #[arg(long, default_value_t = 8.16)]
    pub trans_mean: f64,
    /// Seed for world generation and trajectory sampling.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

pub fn run(args: SimulateArgs) -> CliResult<()> {
    let world =
        generate_world(args.width, args.height, args.obstacles, derive_seed(args.seed, 0, 0))?;
    let sensor = SensorConfig {
        n_beams: args.beams,
        fov: args.fov_deg.to_radians(),
        max_range: args.max_range,
    };
    let dataset = simulate_dataset(
        &world,
        "world.pgm",
        &sensor,
        args.poses,
        args.rot_max_deg.to_radians(),
        args.trans_mean,
        derive_seed(args.seed, 1, 0),
    )?;

    std::fs::create_dir_all(&args.out_dir)?;
    let meta = metadata_line("simulate", &args);

    let pixels: Vec<u8> = (0..args.width * args.height)
        .map(|i| if world.is_occupied(i % args.width, i / args.width) { 0 } else { 255 })
        .collect();
    write_pgm_image_commented(
        &args.out_dir.join("world.pgm"),
        args.width,
        args.height,
        &pixels,
        &[&meta],
    )?;

    let mut doc = serde_json::to_value(&dataset)?;
    doc.as_object_mut()
        .ok_or_else(|| CliError::Input("dataset did not serialize to an object".into()))?
        .insert("metadata".into(), metadata_value("simulate", &args));
    std::fs::write(args.out_dir.join("dataset.json"), serde_json::to_string_pretty(&doc)?)?;

    println!(
        "simulated {} poses x {} beams in a {}x{} world (seed {}) -> {}",
        args.poses,
        args.beams,
        args.width,
        args.height,
        args.seed,
        args.out_dir.display()
    );
    Ok(())
}
