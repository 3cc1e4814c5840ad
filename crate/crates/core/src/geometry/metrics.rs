use crate::error::{Error, Result};
use crate::geometry::align_points;

/// Index and Euclidean distance of the closest target point.
/// Ties break toward the lowest index.
pub fn nearest_neighbor(query: [f64; 2], target: &[[f64; 2]]) -> Result<(usize, f64)> {
    if target.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let mut best = (0usize, f64::INFINITY);
    for (i, p) in target.iter().enumerate() {
        let (dx, dy) = (query[0] - p[0], query[1] - p[1]);
        let d2 = dx * dx + dy * dy;
        if d2 < best.1 {
            best = (i, d2);
        }
    }
    Ok((best.0, best.1.sqrt()))
}

/// Two-way average nearest-neighbor distance between clouds.
pub fn chamfer(x: &[[f64; 2]], y: &[[f64; 2]]) -> Result<f64> {
    Ok(one_way_mean(x, y)? + one_way_mean(y, x)?)
}

fn one_way_mean(from: &[[f64; 2]], to: &[[f64; 2]]) -> Result<f64> {
    if from.is_empty() || to.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let mut sum = 0.0;
    for &p in from {
        sum += nearest_neighbor(p, to)?.1;
    }
    Ok(sum / from.len() as f64)
}

/// Mean distance between corresponding points after removing the global
/// rigid motion fitted over all correspondences.
pub fn point_distance(est: &[Vec<[f64; 2]>], gt: &[Vec<[f64; 2]>]) -> Result<f64> {
    if est.len() != gt.len() {
        return Err(Error::LengthMismatch { what: "cloud list", lhs: est.len(), rhs: gt.len() });
    }
    for (e, g) in est.iter().zip(gt) {
        if e.len() != g.len() {
            return Err(Error::LengthMismatch {
                what: "cloud points",
                lhs: e.len(),
                rhs: g.len(),
            });
        }
    }
    let flat_est: Vec<[f64; 2]> = est.iter().flatten().copied().collect();
    let flat_gt: Vec<[f64; 2]> = gt.iter().flatten().copied().collect();
    let t = align_points(&flat_est, &flat_gt)?;
    let mut sum = 0.0;
    for (&e, &g) in flat_est.iter().zip(&flat_gt) {
        let a = t.apply(e);
        sum += ((a[0] - g[0]).powi(2) + (a[1] - g[1]).powi(2)).sqrt();
    }
    Ok(sum / flat_est.len() as f64)
}
