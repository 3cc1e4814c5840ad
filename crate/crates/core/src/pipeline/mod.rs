//! End-to-end registration runs, baselines, and evaluation.

mod demo1d;
mod evaluate;
mod icp;
mod train;

pub use demo1d::{demo_1d, demo_objective, Demo1DResult};
pub use evaluate::{
    evaluate_suite, mean_heading, quantile, reloc_error_image, relocalization_study,
    MethodReport, RelocField, RelocSample,
};
pub use icp::{icp_pair, run_icp, run_icp_poses, IcpMetric};
pub use train::{networks_from_snapshot, run_deepmapping, run_direct_opt, warm_start_compose};

use serde::{Deserialize, Serialize};

use crate::autodiff::Param;
use crate::error::{Error, Result};
use crate::geometry::Trajectory;
use crate::model::LNetVariant;

/// Registration method of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Deepmapping,
    Direct,
    IcpPoint,
    IcpPlane,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Deepmapping => "deepmapping",
            Variant::Direct => "direct",
            Variant::IcpPoint => "icp-point",
            Variant::IcpPlane => "icp-plane",
        }
    }
}

/// Coarse-registration warm start applied before gradient refinement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarmStart {
    None,
    IcpPoint,
    IcpPlane,
}

/// Full configuration of one registration run. Echoed verbatim into every
/// result for auditability; unknown JSON fields are rejected, missing ones
/// take these defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub variant: Variant,
    pub epochs: usize,
    pub lr: f64,
    /// Scans per optimization chunk; one parameter update per chunk.
    pub batch_size: usize,
    /// Chamfer weight of the total loss.
    pub lambda: f64,
    pub samples_per_ray: usize,
    pub neighbor_window: usize,
    pub seed: u64,
    pub warm_start: WarmStart,
    /// Divisor applied to scan coordinates before they enter the networks;
    /// `None` picks the largest absolute coordinate in the input scans.
    pub coord_scale: Option<f64>,
    pub lnet_variant: LNetVariant,
    pub lnet_features: Vec<usize>,
    pub lnet_head: Vec<usize>,
    pub lnet_kernel: usize,
    pub lnet_dilation: usize,
    pub mnet_hidden: Vec<usize>,
    /// Iteration cap and increment-norm stop for ICP (runs and warm starts).
    pub icp_max_iter: usize,
    pub icp_tol: f64,
    /// Epochs at which full parameter snapshots are kept on the result
    /// (in-memory test hook, never serialized).
    #[serde(skip)]
    pub log_param_epochs: Vec<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            variant: Variant::Deepmapping,
            epochs: 3000,
            lr: 0.001,
            batch_size: 128,
            lambda: 10.0,
            samples_per_ray: 19,
            neighbor_window: 1,
            seed: 0,
            warm_start: WarmStart::None,
            coord_scale: None,
            lnet_variant: LNetVariant::Conv,
            lnet_features: vec![64, 128, 1024],
            lnet_head: vec![512, 256],
            lnet_kernel: 3,
            lnet_dilation: 2,
            mnet_hidden: vec![64, 512, 512, 256, 128],
            icp_max_iter: 50,
            icp_tol: 1e-6,
            log_param_epochs: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let complaint = if self.epochs == 0 {
            "epochs must be >= 1"
        } else if !(self.lr > 0.0) {
            "lr must be positive"
        } else if self.batch_size == 0 {
            "batch_size must be >= 1"
        } else if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            "lambda must be finite and non-negative"
        } else if self.samples_per_ray == 0 {
            "samples_per_ray must be >= 1"
        } else if self.neighbor_window == 0 {
            "neighbor_window must be >= 1"
        } else if self.icp_max_iter == 0 {
            "icp_max_iter must be >= 1"
        } else if !(self.icp_tol > 0.0) {
            "icp_tol must be positive"
        } else if matches!(self.coord_scale, Some(s) if !(s > 0.0)) {
            "coord_scale must be positive"
        } else {
            return Ok(());
        };
        Err(Error::InvalidArgument { op: "run_config", msg: complaint.into() })
    }

    /// Human-readable method label, including the warm start when present.
    pub fn method_label(&self) -> String {
        match self.warm_start {
            WarmStart::None => self.variant.as_str().to_string(),
            WarmStart::IcpPoint => format!("{}+warm-icp-point", self.variant.as_str()),
            WarmStart::IcpPlane => format!("{}+warm-icp-plane", self.variant.as_str()),
        }
    }
}

/// Registration quality against ground truth.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Absolute trajectory error: position RMSE after rigid alignment.
    pub ate: f64,
    /// Mean per-point distance between aligned registered clouds and the
    /// ground-truth clouds.
    pub point_distance: f64,
}

/// Parameter snapshot captured mid-run (test hook; not serialized).
/// A snapshot at epoch `e < epochs` holds the parameters entering that
/// epoch; a snapshot at `epochs` holds the trained parameters.
#[derive(Clone, Debug, Default)]
pub struct ParamSnapshot {
    pub epoch: usize,
    pub params: Vec<Param>,
}

/// Outcome of one registration run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegistrationResult {
    /// Absolute pose estimate per scan, rotation wrapped to (-pi, pi].
    pub estimated_poses: Trajectory,
    /// Pose estimates before the first parameter update (empty for ICP).
    pub initial_poses: Trajectory,
    /// Training loss per epoch (empty for ICP variants).
    pub loss_trace: Vec<f64>,
    /// ATE of the poses entering each epoch (empty for ICP variants or
    /// datasets without ground truth).
    pub ate_trace: Vec<f64>,
    pub metrics: Option<Metrics>,
    /// Seconds of wall time; excluded from determinism comparisons.
    pub wall_time: f64,
    /// Divisor that was applied to scan coordinates before they entered the
    /// networks (the resolved value of `config.coord_scale`; 1 for ICP).
    pub coord_scale: f64,
    pub config: RunConfig,
    #[serde(skip)]
    pub param_snapshots: Vec<ParamSnapshot>,
}

impl RegistrationResult {
    pub fn method_label(&self) -> String {
        self.config.method_label()
    }
}

/// Wrap an angle to the reporting range `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    PI - (PI - a).rem_euclid(TAU)
}

/// ATE and point distance of absolute pose estimates against ground truth.
pub(crate) fn compute_metrics(
    poses: &[crate::geometry::Pose2],
    scans: &[Vec<[f64; 2]>],
    gt: &[crate::geometry::Pose2],
) -> Result<Metrics> {
    use crate::geometry::transform_points;
    let ate = crate::geometry::ate(poses, gt)?;
    let est_clouds: Vec<Vec<[f64; 2]>> =
        poses.iter().zip(scans).map(|(p, s)| transform_points(p, s)).collect();
    let gt_clouds: Vec<Vec<[f64; 2]>> =
        gt.iter().zip(scans).map(|(p, s)| transform_points(p, s)).collect();
    let point_distance = crate::geometry::point_distance(&est_clouds, &gt_clouds)?;
    Ok(Metrics { ate, point_distance })
}

/// Derive an independent stream seed from a base seed and two indices
/// (splitmix-style). Used for per-epoch, per-scan sampling and wherever one
/// user-facing seed must fan out into several uncorrelated streams.
pub fn derive_seed(base: u64, epoch: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(epoch.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
