//! Incremental iterative closest point baselines (point-to-point and
//! point-to-plane), chaining pairwise estimates over consecutive scans.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{align_points, nearest_neighbor, transform_points, Pose2, Trajectory};
use crate::pipeline::{compute_metrics, wrap_angle, RegistrationResult, RunConfig, Variant};
use crate::simulator::SimDataset;

/// Distance metric minimized by each ICP iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IcpMetric {
    Point,
    Plane,
}

/// Estimate the rigid motion `T` with `target ≈ T(source)`.
///
/// Starts from the identity, alternates nearest-neighbor correspondence with
/// either the closed-form rigid fit (point) or a linearized least-squares
/// step against PCA surface normals (plane), and stops when the pose
/// increment norm `sqrt(tx²+ty²+alpha²)` drops below `tol` or after
/// `max_iter` iterations.
pub fn icp_pair(
    source: &[[f64; 2]],
    target: &[[f64; 2]],
    metric: IcpMetric,
    max_iter: usize,
    tol: f64,
) -> Result<Pose2> {
    if source.len() < 3 || target.len() < 3 {
        return Err(Error::Degenerate(format!(
            "ICP needs at least 3 points per scan, got {} and {}",
            source.len(),
            target.len()
        )));
    }
    let normals = match metric {
        IcpMetric::Point => Vec::new(),
        IcpMetric::Plane => pca_normals(target, 8),
    };

    let mut t = Pose2::IDENTITY;
    for _ in 0..max_iter {
        let moved = transform_points(&t, source);
        let increment = match metric {
            IcpMetric::Point => {
                let matched: Vec<[f64; 2]> = moved
                    .iter()
                    .map(|&p| nearest_neighbor(p, target).map(|(j, _)| target[j]))
                    .collect::<Result<_>>()?;
                align_points(&moved, &matched)?
            }
            IcpMetric::Plane => plane_step(&moved, target, &normals)?,
        };
        t = increment.compose(&t);
        let norm = (increment.tx * increment.tx
            + increment.ty * increment.ty
            + increment.alpha * increment.alpha)
            .sqrt();
        if norm < tol {
            break;
        }
    }
    Ok(t)
}

/// One linearized point-to-plane update: minimizes
/// `Σ (n_j · (p_j + δt + δθ×p_j − q_j))²` over `(δtx, δty, δθ)`.
fn plane_step(moved: &[[f64; 2]], target: &[[f64; 2]], normals: &[[f64; 2]]) -> Result<Pose2> {
    let mut a = [[0.0f64; 3]; 3];
    let mut b = [0.0f64; 3];
    for &p in moved {
        let (j, _) = nearest_neighbor(p, target)?;
        let q = target[j];
        let n = normals[j];
        let r = n[0] * (p[0] - q[0]) + n[1] * (p[1] - q[1]);
        let jac = [n[0], n[1], p[0] * n[1] - p[1] * n[0]];
        for (row, &ji) in jac.iter().enumerate() {
            for (col, &jj) in jac.iter().enumerate() {
                a[row][col] += ji * jj;
            }
            b[row] -= ji * r;
        }
    }
    let delta = solve3(a, b).ok_or_else(|| {
        Error::Degenerate("point-to-plane normal equations are singular".into())
    })?;
    Ok(Pose2::new(delta[0], delta[1], delta[2]))
}

/// Solve a 3x3 linear system by Gaussian elimination with partial pivoting.
fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let mut m = [[0.0f64; 4]; 3];
    for i in 0..3 {
        m[i][..3].copy_from_slice(&a[i]);
        m[i][3] = b[i];
    }
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| {
            m[i][col].abs().partial_cmp(&m[j][col].abs()).expect("finite pivot")
        })?;
        if m[pivot][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..4 {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    let mut x = [0.0f64; 3];
    for row in (0..3).rev() {
        let mut s = m[row][3];
        for k in row + 1..3 {
            s -= m[row][k] * x[k];
        }
        x[row] = s / m[row][row];
    }
    Some(x)
}

/// Unit normal per point from local PCA: the eigenvector of the smaller
/// eigenvalue of the covariance of the `k` nearest points (self included).
fn pca_normals(points: &[[f64; 2]], k: usize) -> Vec<[f64; 2]> {
    let k = k.min(points.len());
    points
        .iter()
        .map(|&p| {
            let mut dists: Vec<(f64, usize)> = points
                .iter()
                .enumerate()
                .map(|(j, q)| ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2), j))
                .collect();
            dists.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
            let hood: Vec<[f64; 2]> = dists[..k].iter().map(|&(_, j)| points[j]).collect();

            let n = hood.len() as f64;
            let (mx, my) = (
                hood.iter().map(|q| q[0]).sum::<f64>() / n,
                hood.iter().map(|q| q[1]).sum::<f64>() / n,
            );
            let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
            for q in &hood {
                let (dx, dy) = (q[0] - mx, q[1] - my);
                sxx += dx * dx;
                sxy += dx * dy;
                syy += dy * dy;
            }
            // smaller eigenvalue of [[sxx, sxy], [sxy, syy]]
            let half_trace = 0.5 * (sxx + syy);
            let det_root = (0.25 * (sxx - syy).powi(2) + sxy * sxy).sqrt();
            let lambda = half_trace - det_root;
            let candidates = [[sxy, lambda - sxx], [lambda - syy, sxy]];
            let v = candidates
                .into_iter()
                .max_by(|a, b| {
                    let na = a[0] * a[0] + a[1] * a[1];
                    let nb = b[0] * b[0] + b[1] * b[1];
                    na.partial_cmp(&nb).expect("finite eigenvector")
                })
                .expect("two candidates");
            let norm = (v[0] * v[0] + v[1] * v[1]).sqrt();
            if norm < 1e-12 {
                [1.0, 0.0]
            } else {
                [v[0] / norm, v[1] / norm]
            }
        })
        .collect()
}

/// Chain pairwise ICP estimates into absolute poses; scan 0 anchors the
/// frame at the identity.
pub fn run_icp_poses(
    scans: &[Vec<[f64; 2]>],
    metric: IcpMetric,
    max_iter: usize,
    tol: f64,
) -> Result<Trajectory> {
    if scans.len() < 2 {
        return Err(Error::InvalidArgument {
            op: "run_icp",
            msg: format!("need at least 2 scans, got {}", scans.len()),
        });
    }
    let mut poses = vec![Pose2::IDENTITY];
    for i in 1..scans.len() {
        let rel = icp_pair(&scans[i], &scans[i - 1], metric, max_iter, tol)?;
        poses.push(poses[i - 1].compose(&rel));
    }
    Ok(poses)
}

/// Run incremental ICP over a dataset; `cfg.variant` selects the metric.
pub fn run_icp(dataset: &SimDataset, cfg: &RunConfig) -> Result<RegistrationResult> {
    cfg.validate()?;
    let metric = match cfg.variant {
        Variant::IcpPoint => IcpMetric::Point,
        Variant::IcpPlane => IcpMetric::Plane,
        other => {
            return Err(Error::InvalidArgument {
                op: "run_icp",
                msg: format!("variant {other:?} is not an ICP method"),
            })
        }
    };
    let started = Instant::now();
    let scans = dataset.scans();
    let mut poses = run_icp_poses(&scans, metric, cfg.icp_max_iter, cfg.icp_tol)?;
    for p in &mut poses {
        p.alpha = wrap_angle(p.alpha);
    }
    let gt = dataset.gt_poses();
    let metrics = Some(compute_metrics(&poses, &scans, &gt)?);
    Ok(RegistrationResult {
        estimated_poses: poses,
        initial_poses: Vec::new(),
        loss_trace: Vec::new(),
        ate_trace: Vec::new(),
        metrics,
        wall_time: started.elapsed().as_secs_f64(),
        coord_scale: 1.0,
        config: cfg.clone(),
        param_snapshots: Vec::new(),
    })
}
