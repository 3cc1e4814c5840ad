//! SE(2) poses, point-cloud transforms, and registration metrics.

mod align;
mod metrics;

pub use align::{align_points, align_trajectories, ate};
pub use metrics::{chamfer, nearest_neighbor, point_distance};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A rigid 2D transform: rotation by `alpha` (radians) followed by
/// translation `(tx, ty)` (pixels). Serializes as `[tx, ty, alpha]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Pose2 {
    pub tx: f64,
    pub ty: f64,
    pub alpha: f64,
}

impl Pose2 {
    pub const IDENTITY: Pose2 = Pose2 { tx: 0.0, ty: 0.0, alpha: 0.0 };

    pub fn new(tx: f64, ty: f64, alpha: f64) -> Self {
        Pose2 { tx, ty, alpha }
    }

    /// Map a point from this pose's frame into the parent frame.
    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.alpha.sin_cos();
        [self.tx + c * p[0] - s * p[1], self.ty + s * p[0] + c * p[1]]
    }

    /// `self ∘ other`: first apply `other`, then `self`.
    pub fn compose(&self, other: &Pose2) -> Pose2 {
        let t = self.apply([other.tx, other.ty]);
        Pose2 { tx: t[0], ty: t[1], alpha: self.alpha + other.alpha }
    }

    pub fn inverse(&self) -> Pose2 {
        let (s, c) = self.alpha.sin_cos();
        Pose2 {
            tx: -(c * self.tx + s * self.ty),
            ty: -(-s * self.tx + c * self.ty),
            alpha: -self.alpha,
        }
    }

    pub fn translation(&self) -> [f64; 2] {
        [self.tx, self.ty]
    }
}

impl From<[f64; 3]> for Pose2 {
    fn from(v: [f64; 3]) -> Self {
        Pose2 { tx: v[0], ty: v[1], alpha: v[2] }
    }
}

impl From<Pose2> for [f64; 3] {
    fn from(p: Pose2) -> Self {
        [p.tx, p.ty, p.alpha]
    }
}

/// An ordered sequence of poses, one per scan.
pub type Trajectory = Vec<Pose2>;

/// Which frame a cloud's coordinates live in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Frame {
    Local,
    Global,
}

/// A set of 2D points tagged with the frame they live in. Beam order is
/// meaningful and preserved by transforms.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    points: Vec<[f64; 2]>,
    frame: Frame,
}

impl PointCloud {
    pub fn new(points: Vec<[f64; 2]>, frame: Frame) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::InvalidArgument {
                op: "point_cloud",
                msg: "non-finite coordinate".into(),
            });
        }
        Ok(PointCloud { points, frame })
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Map a local-frame cloud into the global frame.
    pub fn to_global(&self, pose: &Pose2) -> PointCloud {
        debug_assert_eq!(self.frame, Frame::Local);
        PointCloud {
            points: transform_points(pose, &self.points),
            frame: Frame::Global,
        }
    }
}

/// Apply a pose to each point, preserving order.
pub fn transform_points(pose: &Pose2, points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    points.iter().map(|&p| pose.apply(p)).collect()
}
