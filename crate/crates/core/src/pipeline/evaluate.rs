//! Aggregate statistics over registration runs and the localization-network
//! relocalization study.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, Tensor, Var};
use crate::error::{Error, Result};
use crate::geometry::Pose2;
use crate::model::{LNet, MapImage};
use crate::pipeline::RegistrationResult;
use crate::simulator::{scan, OccupancyWorld, SensorConfig};

/// Summary statistics for all runs of one method.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: String,
    /// Runs with ground-truth metrics that entered the statistics.
    pub runs: usize,
    pub median_ate: f64,
    pub q1_ate: f64,
    pub q3_ate: f64,
    pub median_point_distance: f64,
    /// Fraction of runs whose ATE is strictly below the threshold.
    pub success_rate: f64,
    pub mean_wall_time: f64,
}

/// Linearly interpolated quantile (the common "type 7" convention):
/// `q = 0` is the minimum, `q = 1` the maximum, `q = 0.5` the median.
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidArgument { op: "quantile", msg: "empty sample".into() });
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidArgument {
            op: "quantile",
            msg: format!("q must lie in [0, 1], got {q}"),
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument { op: "quantile", msg: "non-finite sample".into() });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 < sorted.len() {
        Ok(sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]))
    } else {
        Ok(sorted[lo])
    }
}

/// Group runs by method label and report per-method statistics.
///
/// Runs without ground-truth metrics are skipped; a method whose runs are all
/// metric-less is dropped. Reports come back sorted by method label.
pub fn evaluate_suite(
    results: &[RegistrationResult],
    ate_threshold: f64,
) -> Result<Vec<MethodReport>> {
    if results.is_empty() {
        return Err(Error::InvalidArgument { op: "evaluate_suite", msg: "no results".into() });
    }
    if !(ate_threshold > 0.0 && ate_threshold.is_finite()) {
        return Err(Error::InvalidArgument {
            op: "evaluate_suite",
            msg: format!("ate_threshold must be positive, got {ate_threshold}"),
        });
    }
    let mut groups: BTreeMap<String, Vec<&RegistrationResult>> = BTreeMap::new();
    for r in results.iter().filter(|r| r.metrics.is_some()) {
        groups.entry(r.method_label()).or_default().push(r);
    }
    if groups.is_empty() {
        return Err(Error::InvalidArgument {
            op: "evaluate_suite",
            msg: "no results carry ground-truth metrics".into(),
        });
    }
    let mut reports = Vec::new();
    for (method, runs) in groups {
        let ates: Vec<f64> = runs.iter().map(|r| r.metrics.expect("filtered").ate).collect();
        let pds: Vec<f64> =
            runs.iter().map(|r| r.metrics.expect("filtered").point_distance).collect();
        let successes = ates.iter().filter(|&&a| a < ate_threshold).count();
        reports.push(MethodReport {
            method,
            runs: runs.len(),
            median_ate: quantile(&ates, 0.5)?,
            q1_ate: quantile(&ates, 0.25)?,
            q3_ate: quantile(&ates, 0.75)?,
            median_point_distance: quantile(&pds, 0.5)?,
            success_rate: successes as f64 / runs.len() as f64,
            mean_wall_time: runs.iter().map(|r| r.wall_time).sum::<f64>() / runs.len() as f64,
        });
    }
    Ok(reports)
}

/// Circular mean of the trajectory headings (0 for an empty slice).
pub fn mean_heading(poses: &[Pose2]) -> f64 {
    let (s, c) = poses
        .iter()
        .fold((0.0, 0.0), |(s, c), p| (s + p.alpha.sin(), c + p.alpha.cos()));
    s.atan2(c)
}

/// One relocalization probe: a scan was synthesized at `position` and fed to
/// the trained localization network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelocSample {
    /// Query position (cell center) in world coordinates.
    pub position: [f64; 2],
    /// Distance between the aligned network estimate and the true position.
    pub error: f64,
    /// Distance from the query to the nearest training-trajectory position.
    pub trajectory_distance: f64,
}

/// Relocalization errors over a strided grid of free world cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelocField {
    pub width: usize,
    pub height: usize,
    pub stride: usize,
    pub samples: Vec<RelocSample>,
}

impl RelocField {
    /// Mean error over samples within `near` of the training trajectory and
    /// over samples beyond `far`, when each band is non-empty.
    pub fn band_means(&self, near: f64, far: f64) -> (Option<f64>, Option<f64>) {
        let mean = |band: Vec<f64>| {
            if band.is_empty() { None } else { Some(band.iter().sum::<f64>() / band.len() as f64) }
        };
        let near_band =
            self.samples.iter().filter(|s| s.trajectory_distance <= near).map(|s| s.error);
        let far_band =
            self.samples.iter().filter(|s| s.trajectory_distance > far).map(|s| s.error);
        (mean(near_band.collect()), mean(far_band.collect()))
    }
}

/// Run the trained localization network on synthetic scans taken at every
/// `stride`-th free cell of the world and record its position error.
///
/// Scans are taken at the fixed `heading` (typically the mean training
/// heading), scaled by `coord_scale` exactly as during training, and the
/// network estimate is mapped through `alignment` (the rigid transform that
/// best aligns the run's estimated trajectory with ground truth) before
/// comparing against the query position. Cells whose scan fails or is empty
/// are skipped.
#[allow(clippy::too_many_arguments)]
pub fn relocalization_study(
    lnet: &LNet,
    coord_scale: f64,
    alignment: &Pose2,
    world: &OccupancyWorld,
    sensor: &SensorConfig,
    heading: f64,
    training_positions: &[[f64; 2]],
    stride: usize,
) -> Result<RelocField> {
    if stride == 0 {
        return Err(Error::InvalidArgument { op: "reloc", msg: "stride must be ≥ 1".into() });
    }
    if !(coord_scale > 0.0 && coord_scale.is_finite()) {
        return Err(Error::InvalidArgument {
            op: "reloc",
            msg: format!("coord_scale must be positive, got {coord_scale}"),
        });
    }
    if training_positions.is_empty() {
        return Err(Error::InvalidArgument { op: "reloc", msg: "no training positions".into() });
    }
    let mut samples = Vec::new();
    for iy in (0..world.height()).step_by(stride) {
        for ix in (0..world.width()).step_by(stride) {
            if world.is_occupied(ix, iy) {
                continue;
            }
            let position = [ix as f64 + 0.5, iy as f64 + 0.5];
            let pose = Pose2 { tx: position[0], ty: position[1], alpha: heading };
            let Ok(points) = scan(world, &pose, sensor) else { continue };
            if points.is_empty() {
                continue;
            }
            let estimate = lnet_pose(lnet, coord_scale, &points)?;
            let aligned = alignment.compose(&estimate);
            let [ax, ay] = aligned.translation();
            let error = (ax - position[0]).hypot(ay - position[1]);
            let trajectory_distance = training_positions
                .iter()
                .map(|t| (t[0] - position[0]).hypot(t[1] - position[1]))
                .fold(f64::INFINITY, f64::min);
            samples.push(RelocSample { position, error, trajectory_distance });
        }
    }
    if samples.is_empty() {
        return Err(Error::Degenerate("no free cells to query".into()));
    }
    Ok(RelocField { width: world.width(), height: world.height(), stride, samples })
}

/// Forward one local scan through the network without recording gradients.
fn lnet_pose(lnet: &LNet, coord_scale: f64, points: &[[f64; 2]]) -> Result<Pose2> {
    let mut g = Graph::new();
    let vars: Vec<Var> =
        lnet.params().iter().map(|p| g.constant(p.value.clone())).collect();
    let data: Vec<f64> =
        points.iter().flat_map(|p| [p[0] / coord_scale, p[1] / coord_scale]).collect();
    let input = g.constant(Tensor::new(vec![points.len(), 2], data)?);
    let out = lnet.forward(&mut g, &vars, input)?;
    let v = g.value(out);
    Ok(Pose2 {
        tx: v.data()[0] * coord_scale,
        ty: v.data()[1] * coord_scale,
        alpha: v.data()[2],
    })
}

/// Render a relocalization field as a grayscale image: unqueried cells are
/// white (255), queried cells darken linearly from 0 (no error) up to 240 at
/// the worst observed error.
pub fn reloc_error_image(field: &RelocField) -> MapImage {
    let mut pixels = vec![255u8; field.width * field.height];
    let max_err = field
        .samples
        .iter()
        .map(|s| s.error)
        .fold(0.0_f64, f64::max);
    for s in &field.samples {
        let level = if max_err > 0.0 {
            (s.error / max_err * 240.0).round() as u8
        } else {
            0
        };
        let cx = s.position[0] as usize;
        let cy = s.position[1] as usize;
        for iy in cy..(cy + field.stride).min(field.height) {
            for ix in cx..(cx + field.stride).min(field.width) {
                pixels[iy * field.width + ix] = level;
            }
        }
    }
    MapImage { width: field.width, height: field.height, pixels }
}
