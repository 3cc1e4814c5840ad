//! Differentiable registration losses.

use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, Tensor, Var};
use crate::error::{Error, Result};
use crate::model::{FreeSpaceSamples, LNet, MNet};

const BCE_CLAMP: f64 = 1e-7;

/// Weights and sampling parameters of the total loss.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    /// Weight of the Chamfer term; 0 disables it.
    pub lambda: f64,
    /// Free-space samples drawn per laser ray each forward pass.
    pub samples_per_ray: usize,
    /// Half-width of the temporal neighborhood used by the Chamfer term.
    pub neighbor_window: usize,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig { lambda: 10.0, samples_per_ray: 19, neighbor_window: 1 }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = !self.lambda.is_finite()
            || self.lambda < 0.0
            || self.samples_per_ray == 0
            || self.neighbor_window == 0;
        if bad {
            return Err(Error::InvalidArgument {
                op: "loss_config",
                msg: format!("{self:?}"),
            });
        }
        Ok(())
    }
}

/// Binary cross entropy against a constant label, averaged over the batch.
///
/// Probabilities are clamped to `[1e-7, 1 - 1e-7]` first, so the value is
/// finite for any input in `[0, 1]`.
pub fn bce(g: &mut Graph, p: Var, y: f64) -> Result<Var> {
    let elems = bce_elements(g, p, y);
    g.mean(elems)
}

/// Per-element BCE, same shape as `p`.
fn bce_elements(g: &mut Graph, p: Var, y: f64) -> Var {
    let pc = g.clamp(p, BCE_CLAMP, 1.0 - BCE_CLAMP);
    if y == 1.0 {
        let lp = g.ln(pc);
        g.neg(lp)
    } else if y == 0.0 {
        let npc = g.neg(pc);
        let one_minus = g.add_const(npc, 1.0);
        let l1m = g.ln(one_minus);
        g.neg(l1m)
    } else {
        let lp = g.ln(pc);
        let npc = g.neg(pc);
        let one_minus = g.add_const(npc, 1.0);
        let l1m = g.ln(one_minus);
        let a = g.mul_const(lp, -y);
        let b = g.mul_const(l1m, -(1.0 - y));
        g.add(a, b).expect("same shape")
    }
}

/// Rigidly transform a local cloud by a differentiable pose.
///
/// `pose` is a `[3]` vector var `(tx, ty, alpha)`; the result is the `[n,2]`
/// matrix of `R(alpha)·p + t`, with gradients flowing into the pose.
pub fn transform_cloud(g: &mut Graph, pose: Var, points: &[[f64; 2]]) -> Result<Var> {
    if g.value(pose).shape() != [3] {
        return Err(Error::InvalidArgument {
            op: "transform_cloud",
            msg: format!("pose must be a [3] vector, got {:?}", g.value(pose).shape()),
        });
    }
    if points.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let px = g.constant(Tensor::vector(points.iter().map(|p| p[0]).collect()));
    let py = g.constant(Tensor::vector(points.iter().map(|p| p[1]).collect()));
    let tx = g.index(pose, 0)?;
    let ty = g.index(pose, 1)?;
    let alpha = g.index(pose, 2)?;
    let ca = g.cos(alpha);
    let sa = g.sin(alpha);

    let px_ca = g.mul(px, ca)?;
    let py_sa = g.mul(py, sa)?;
    let rx = g.sub(px_ca, py_sa)?;
    let gx = g.add(rx, tx)?;

    let px_sa = g.mul(px, sa)?;
    let py_ca = g.mul(py, ca)?;
    let ry = g.add(px_sa, py_ca)?;
    let gy = g.add(ry, ty)?;

    g.stack_cols(gx, gy)
}

/// Run the L-Net once per scan, yielding one pose var per scan.
pub fn lnet_poses(
    g: &mut Graph,
    lnet: &LNet,
    lnet_vars: &[Var],
    scans: &[Vec<[f64; 2]>],
) -> Result<Vec<Var>> {
    scans
        .iter()
        .map(|scan| {
            let n = scan.len();
            let data: Vec<f64> = scan.iter().flatten().copied().collect();
            let input = g.constant(Tensor::new(vec![n, 2], data)?);
            lnet.forward(g, lnet_vars, input)
        })
        .collect()
}

/// Per-scan transformed clouds: scan points and free-space samples moved to
/// the global frame by the same differentiable pose.
struct GlobalClouds {
    occupied: Vec<Var>,
    free: Vec<Var>,
}

fn build_global(
    g: &mut Graph,
    scans: &[Vec<[f64; 2]>],
    samples: &[FreeSpaceSamples],
    poses: &[Var],
) -> Result<GlobalClouds> {
    if scans.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if scans.len() != samples.len() || scans.len() != poses.len() {
        return Err(Error::LengthMismatch {
            what: "scans vs samples/poses",
            lhs: scans.len(),
            rhs: samples.len().min(poses.len()),
        });
    }
    let mut occupied = Vec::with_capacity(scans.len());
    let mut free = Vec::with_capacity(scans.len());
    for ((scan, s), pose) in scans.iter().zip(samples).zip(poses) {
        occupied.push(transform_cloud(g, *pose, scan)?);
        free.push(transform_cloud(g, *pose, &s.samples)?);
    }
    Ok(GlobalClouds { occupied, free })
}

/// Mean over clouds of (mean BCE of scan points against label 1 plus mean
/// BCE of free-space samples against label 0), evaluated on the occupancy
/// network in a single batched forward pass.
fn occupancy_from_global(
    g: &mut Graph,
    mnet: &MNet,
    mnet_vars: &[Var],
    global: &GlobalClouds,
) -> Result<Var> {
    let mut blocks: Vec<Var> = global.occupied.clone();
    blocks.extend_from_slice(&global.free);
    let mut sizes: Vec<usize> = Vec::with_capacity(blocks.len());
    let mut labels: Vec<f64> = Vec::new();
    for v in &global.occupied {
        let n = g.value(*v).rows();
        sizes.push(n);
        labels.extend(std::iter::repeat(1.0).take(n));
    }
    for v in &global.free {
        let n = g.value(*v).rows();
        sizes.push(n);
        labels.extend(std::iter::repeat(0.0).take(n));
    }

    let all = g.concat_rows(&blocks)?;
    let probs = mnet.forward(g, mnet_vars, all)?;
    let pc = g.clamp(probs, BCE_CLAMP, 1.0 - BCE_CLAMP);
    let lp = g.ln(pc);
    let npc = g.neg(pc);
    let one_minus = g.add_const(npc, 1.0);
    let l1m = g.ln(one_minus);
    let y = g.constant(Tensor::vector(labels.clone()));
    let y_comp = g.constant(Tensor::vector(labels.iter().map(|l| 1.0 - l).collect()));
    let occ_term = g.mul(y, lp)?;
    let free_term = g.mul(y_comp, l1m)?;
    let ll = g.add(occ_term, free_term)?;
    let nll = g.neg(ll);
    let per_cloud = g.chunk_mean(nll, sizes)?;
    let half = g.mean(per_cloud)?;
    // mean over 2K chunk means is half of (1/K)·sum of per-cloud pair sums
    Ok(g.mul_const(half, 2.0))
}

/// Occupancy loss with poses predicted by the L-Net.
pub fn occupancy_loss(
    g: &mut Graph,
    lnet: &LNet,
    lnet_vars: &[Var],
    mnet: &MNet,
    mnet_vars: &[Var],
    scans: &[Vec<[f64; 2]>],
    samples: &[FreeSpaceSamples],
) -> Result<Var> {
    let poses = lnet_poses(g, lnet, lnet_vars, scans)?;
    occupancy_loss_with_poses(g, mnet, mnet_vars, scans, samples, &poses)
}

/// Occupancy loss with externally supplied pose vars (direct optimization,
/// frozen-pose evaluation).
pub fn occupancy_loss_with_poses(
    g: &mut Graph,
    mnet: &MNet,
    mnet_vars: &[Var],
    scans: &[Vec<[f64; 2]>],
    samples: &[FreeSpaceSamples],
    poses: &[Var],
) -> Result<Var> {
    let global = build_global(g, scans, samples, poses)?;
    occupancy_from_global(g, mnet, mnet_vars, &global)
}

/// Lowest-index nearest neighbor of each row of `a` among the rows of `b`,
/// computed from the current forward values.
fn nn_indices(a: &Tensor, b: &Tensor) -> Vec<usize> {
    let (bn, bd) = (b.rows(), b.cols());
    let bdata = b.data();
    a.data()
        .chunks_exact(a.cols())
        .map(|p| {
            let mut best = 0usize;
            let mut best_d2 = f64::INFINITY;
            for j in 0..bn {
                let q = &bdata[j * bd..(j + 1) * bd];
                let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
                if d2 < best_d2 {
                    best_d2 = d2;
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Mean euclidean distance from each row of `a` to its nearest neighbor in
/// `b`; neighbor indices are recomputed per forward pass and treated as
/// constants by the backward pass.
fn one_way_chamfer(g: &mut Graph, a: Var, b: Var) -> Result<Var> {
    let indices = nn_indices(g.value(a), g.value(b));
    let nb = g.gather_rows(b, indices)?;
    let d = g.sub(a, nb)?;
    let d2 = g.mul(d, d)?;
    let s = g.row_sum(d2)?;
    let r = g.sqrt(s);
    g.mean(r)
}

/// Symmetric Chamfer distance between two `[n,2]` cloud vars.
fn chamfer_pair(g: &mut Graph, a: Var, b: Var) -> Result<Var> {
    let ab = one_way_chamfer(g, a, b)?;
    let ba = one_way_chamfer(g, b, a)?;
    g.add(ab, ba)
}

/// Sum of Chamfer distances between every cloud and its temporal neighbors
/// within `window`. Each unordered pair appears twice in the double sum, so
/// the result is `2·Σ_{i<j≤i+window} d(G_i, G_j)`.
pub fn chamfer_loss(g: &mut Graph, clouds: &[Var], window: usize) -> Result<Var> {
    if window == 0 {
        return Err(Error::InvalidArgument {
            op: "chamfer_loss",
            msg: "window must be at least 1".into(),
        });
    }
    if clouds.len() < 2 {
        return Err(Error::InvalidArgument {
            op: "chamfer_loss",
            msg: format!("need at least 2 clouds, got {}", clouds.len()),
        });
    }
    let mut total: Option<Var> = None;
    for i in 0..clouds.len() {
        for j in i + 1..(i + window + 1).min(clouds.len()) {
            let pair = chamfer_pair(g, clouds[i], clouds[j])?;
            total = Some(match total {
                Some(t) => g.add(t, pair)?,
                None => pair,
            });
        }
    }
    Ok(g.mul_const(total.expect("at least one pair"), 2.0))
}

/// Total loss with poses predicted by the L-Net. Returns the loss and the
/// per-scan pose vars so callers can read the current pose estimates off
/// the same tape.
#[allow(clippy::too_many_arguments)]
pub fn total_loss(
    g: &mut Graph,
    lnet: &LNet,
    lnet_vars: &[Var],
    mnet: &MNet,
    mnet_vars: &[Var],
    scans: &[Vec<[f64; 2]>],
    samples: &[FreeSpaceSamples],
    cfg: &LossConfig,
) -> Result<(Var, Vec<Var>)> {
    let poses = lnet_poses(g, lnet, lnet_vars, scans)?;
    let loss = total_loss_with_poses(g, mnet, mnet_vars, scans, samples, &poses, cfg)?;
    Ok((loss, poses))
}

/// Total loss `occupancy + lambda·chamfer` with externally supplied poses.
/// With `lambda == 0` the result is exactly the occupancy loss.
pub fn total_loss_with_poses(
    g: &mut Graph,
    mnet: &MNet,
    mnet_vars: &[Var],
    scans: &[Vec<[f64; 2]>],
    samples: &[FreeSpaceSamples],
    poses: &[Var],
    cfg: &LossConfig,
) -> Result<Var> {
    cfg.validate()?;
    let global = build_global(g, scans, samples, poses)?;
    let occ = occupancy_from_global(g, mnet, mnet_vars, &global)?;
    if cfg.lambda == 0.0 {
        return Ok(occ);
    }
    let ch = chamfer_loss(g, &global.occupied, cfg.neighbor_window)?;
    let weighted = g.mul_const(ch, cfg.lambda);
    g.add(occ, weighted)
}
