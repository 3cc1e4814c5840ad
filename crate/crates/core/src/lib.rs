//! Unsupervised registration of multiple 2D Lidar scans.
//!
//! The crate trains a pair of small networks — one regressing sensor poses
//! from raw scans, one classifying map occupancy — against self-supervised
//! consistency losses, and provides classical baselines (ICP, direct pose
//! optimization), a scan simulator, and evaluation tooling around them.

pub mod autodiff;
pub mod error;
pub mod geometry;
pub mod model;
pub mod pipeline;
pub mod simulator;

pub use error::{Error, Result};
