use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::Pose2;
use crate::simulator::{cast_ray, OccupancyWorld, SensorConfig};

/// Simulate one scan: `n_beams` rays evenly spaced over the FOV starting at
/// the pose heading. Returns hit points in the sensor-local frame, in beam
/// order.
pub fn scan(world: &OccupancyWorld, pose: &Pose2, cfg: &SensorConfig) -> Result<Vec<[f64; 2]>> {
    cfg.validate()?;
    let origin = pose.translation();
    let inv = pose.inverse();
    let spacing = cfg.fov / cfg.n_beams as f64;
    let mut points = Vec::with_capacity(cfg.n_beams);
    for b in 0..cfg.n_beams {
        let angle = pose.alpha + b as f64 * spacing;
        let hit = cast_ray(world, origin, [angle.cos(), angle.sin()], cfg.max_range)?;
        points.push(inv.apply(hit));
    }
    Ok(points)
}

/// One raw perturbation draw: heading increment uniform in
/// `[-rot_max, rot_max]` and step length uniform in
/// `[0.5, 1.5]·trans_mean` (so the expected step equals `trans_mean`).
pub fn draw_step(rng: &mut impl Rng, rot_max: f64, trans_mean: f64) -> (f64, f64) {
    let dh = if rot_max > 0.0 { rng.gen_range(-rot_max..=rot_max) } else { 0.0 };
    let len = trans_mean * rng.gen_range(0.5..1.5);
    (dh, len)
}

/// Random-walk trajectory over the free space. Steps that would cross an
/// obstacle or leave the world are rejected and redrawn; after `RETRIES`
/// failures the heading is reversed, and a second exhausted budget is an
/// error naming the stuck pose.
pub fn sample_trajectory(
    world: &OccupancyWorld,
    n_poses: usize,
    rot_max: f64,
    trans_mean: f64,
    seed: u64,
) -> Result<Vec<Pose2>> {
    const RETRIES: usize = 100;
    if n_poses == 0 {
        return Err(Error::InvalidArgument { op: "sample_trajectory", msg: "n_poses must be ≥ 1".into() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = random_free_position(world, &mut rng)?;
    let mut heading = rng.gen_range(-PI..PI);
    let mut poses = vec![Pose2::new(start[0], start[1], heading)];

    while poses.len() < n_poses {
        let pos = poses.last().unwrap().translation();
        let mut accepted = None;
        'search: for half in 0..2 {
            if half == 1 {
                heading += PI; // reverse and try the other way
            }
            for _ in 0..RETRIES {
                let (dh, len) = draw_step(&mut rng, rot_max, trans_mean);
                let h = heading + dh;
                let dir = [h.cos(), h.sin()];
                let hit = cast_ray(world, pos, dir, None)?;
                let clearance = ((hit[0] - pos[0]).powi(2) + (hit[1] - pos[1]).powi(2)).sqrt();
                if clearance > len {
                    accepted = Some((h, [pos[0] + len * dir[0], pos[1] + len * dir[1]]));
                    break 'search;
                }
            }
        }
        match accepted {
            Some((h, p)) => {
                heading = h;
                poses.push(Pose2::new(p[0], p[1], h));
            }
            None => {
                return Err(Error::TrajectoryStuck { pose_index: poses.len(), retries: 2 * RETRIES })
            }
        }
    }
    Ok(poses)
}

/// Uniform position inside a uniformly chosen cell of the largest free
/// region, away from the cell edges.
fn random_free_position(world: &OccupancyWorld, rng: &mut impl Rng) -> Result<[f64; 2]> {
    let (mask, _) = world.largest_free_component();
    let free: Vec<usize> = mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect();
    if free.is_empty() {
        return Err(Error::WorldGeneration("no free cells to start a trajectory".into()));
    }
    let cell = free[rng.gen_range(0..free.len())];
    let (ix, iy) = (cell % world.width(), cell / world.width());
    Ok([ix as f64 + rng.gen_range(0.25..0.75), iy as f64 + rng.gen_range(0.25..0.75)])
}
