use crate::error::{Error, Result};
use crate::geometry::Pose2;

/// Closed-form rigid transform minimizing `Σ‖T(est_i) − gt_i‖²` over
/// index-corresponding points: centroids plus the atan2 of the 2×2
/// cross-covariance. No scale.
pub fn align_points(est: &[[f64; 2]], gt: &[[f64; 2]]) -> Result<Pose2> {
    if est.len() != gt.len() {
        return Err(Error::LengthMismatch { what: "alignment points", lhs: est.len(), rhs: gt.len() });
    }
    if est.len() < 2 {
        return Err(Error::Degenerate("alignment needs at least 2 points".into()));
    }
    let ce = centroid(est);
    let cg = centroid(gt);
    let (mut sxx, mut sxy, mut spread_e, mut spread_g) = (0.0, 0.0, 0.0, 0.0);
    for (&e, &g) in est.iter().zip(gt) {
        let (ex, ey) = (e[0] - ce[0], e[1] - ce[1]);
        let (gx, gy) = (g[0] - cg[0], g[1] - cg[1]);
        sxx += ex * gx + ey * gy;
        sxy += ex * gy - ey * gx;
        spread_e += ex * ex + ey * ey;
        spread_g += gx * gx + gy * gy;
    }
    if spread_e == 0.0 || spread_g == 0.0 {
        return Err(Error::Degenerate("alignment points are all coincident".into()));
    }
    let alpha = sxy.atan2(sxx);
    let (s, c) = alpha.sin_cos();
    let tx = cg[0] - (c * ce[0] - s * ce[1]);
    let ty = cg[1] - (s * ce[0] + c * ce[1]);
    Ok(Pose2 { tx, ty, alpha })
}

fn centroid(points: &[[f64; 2]]) -> [f64; 2] {
    let mut c = [0.0, 0.0];
    for p in points {
        c[0] += p[0];
        c[1] += p[1];
    }
    [c[0] / points.len() as f64, c[1] / points.len() as f64]
}

/// Fit the rigid transform over pose positions and return it along with the
/// transformed estimate.
pub fn align_trajectories(est: &[Pose2], gt: &[Pose2]) -> Result<(Pose2, Vec<Pose2>)> {
    let pe: Vec<[f64; 2]> = est.iter().map(Pose2::translation).collect();
    let pg: Vec<[f64; 2]> = gt.iter().map(Pose2::translation).collect();
    let t = align_points(&pe, &pg)?;
    let aligned = est.iter().map(|p| t.compose(p)).collect();
    Ok((t, aligned))
}

/// Absolute trajectory error: RMSE of position errors after closed-form
/// rigid alignment. Orientation errors are not included.
pub fn ate(est: &[Pose2], gt: &[Pose2]) -> Result<f64> {
    let (_, aligned) = align_trajectories(est, gt)?;
    let mut sum = 0.0;
    for (a, g) in aligned.iter().zip(gt) {
        sum += (a.tx - g.tx).powi(2) + (a.ty - g.ty).powi(2);
    }
    Ok((sum / gt.len() as f64).sqrt())
}
