//! Localization network, occupancy network, and the unsupervised losses.
//!
//! The registration objective treats scan points (transformed into the
//! global frame by per-scan poses) as occupied and points sampled on the
//! line of sight as free, and scores both against a learned continuous
//! occupancy field. Optionally a Chamfer term ties temporally neighboring
//! clouds together.

pub(crate) mod layers;
mod lnet;
mod loss;
mod mnet;
mod raster;

pub use lnet::{LNet, LNetConfig, LNetVariant};
pub use loss::{
    bce, chamfer_loss, lnet_poses, occupancy_loss, occupancy_loss_with_poses, total_loss,
    total_loss_with_poses, transform_cloud, LossConfig,
};
pub use mnet::{MNet, MNetConfig};
pub use raster::{
    explored_mask, rasterize_map, write_map_pgm, MapImage, MAP_FREE, MAP_OCCUPIED,
    MAP_UNEXPLORED,
};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Free-space points drawn on the line of sight of one scan, local frame.
///
/// Sample `j` of point `p` is `u·p` with `u ~ Uniform(0,1)`, so every sample
/// lies strictly between the sensor origin and the surface hit. Samples are
/// redrawn each forward pass; the generating seed is recorded so a pass can
/// be reproduced exactly.
#[derive(Clone, Debug)]
pub struct FreeSpaceSamples {
    pub samples: Vec<[f64; 2]>,
    pub per_point: usize,
    pub seed: u64,
}

/// Draw `k` free-space samples per scan point (see [`FreeSpaceSamples`]).
///
/// Samples are ordered point-major: the `k` samples of point 0 come first.
pub fn sample_free_space(points: &[[f64; 2]], k: usize, seed: u64) -> Result<FreeSpaceSamples> {
    if k == 0 {
        return Err(Error::InvalidArgument {
            op: "sample_free_space",
            msg: "need at least one sample per ray".into(),
        });
    }
    if points.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(points.len() * k);
    for p in points {
        for _ in 0..k {
            let u = loop {
                let u: f64 = rng.gen_range(0.0..1.0);
                if u > 0.0 {
                    break u;
                }
            };
            samples.push([u * p[0], u * p[1]]);
        }
    }
    Ok(FreeSpaceSamples { samples, per_point: k, seed })
}
