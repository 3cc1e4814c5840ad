use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Pose2;
use crate::simulator::{sample_trajectory, scan, OccupancyWorld};

/// Beam layout of the simulated scanner. `fov` is radians internally and
/// degrees on disk; `max_range: None` means unlimited sensing range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "SensorConfigJson", into = "SensorConfigJson")]
pub struct SensorConfig {
    pub n_beams: usize,
    pub fov: f64,
    pub max_range: Option<f64>,
}

impl SensorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_beams == 0 {
            return Err(Error::InvalidArgument { op: "sensor", msg: "n_beams must be ≥ 1".into() });
        }
        if !(self.fov > 0.0 && self.fov <= TAU + 1e-12) {
            return Err(Error::InvalidArgument {
                op: "sensor",
                msg: format!("fov must be in (0, 2π], got {}", self.fov),
            });
        }
        if let Some(r) = self.max_range {
            if !(r > 0.0) {
                return Err(Error::InvalidArgument {
                    op: "sensor",
                    msg: "max_range must be positive".into(),
                });
            }
        }
        Ok(())
    }
}

impl Default for SensorConfig {
    fn default() -> Self {
        SensorConfig { n_beams: 256, fov: TAU, max_range: None }
    }
}

#[derive(Serialize, Deserialize)]
struct SensorConfigJson {
    n_beams: usize,
    fov_deg: f64,
    max_range: Option<f64>,
}

impl From<SensorConfigJson> for SensorConfig {
    fn from(j: SensorConfigJson) -> Self {
        SensorConfig { n_beams: j.n_beams, fov: j.fov_deg.to_radians(), max_range: j.max_range }
    }
}

impl From<SensorConfig> for SensorConfigJson {
    fn from(c: SensorConfig) -> Self {
        SensorConfigJson { n_beams: c.n_beams, fov_deg: c.fov.to_degrees(), max_range: c.max_range }
    }
}

/// Step-perturbation statistics a dataset was generated with.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub rot_max_deg: f64,
    pub trans_mean: f64,
}

/// One ground-truth pose and the local-frame scan taken there.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub pose: Pose2,
    pub points: Vec<[f64; 2]>,
}

/// A simulated registration problem: scans with hidden ground-truth poses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimDataset {
    /// Path of the world PGM this dataset was rendered from.
    pub world: String,
    pub seed: u64,
    pub sensor: SensorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<Perturbation>,
    pub frames: Vec<Frame>,
}

impl SimDataset {
    pub fn gt_poses(&self) -> Vec<Pose2> {
        self.frames.iter().map(|f| f.pose).collect()
    }

    pub fn scans(&self) -> Vec<Vec<[f64; 2]>> {
        self.frames.iter().map(|f| f.points.clone()).collect()
    }
}

/// Sample a trajectory and render every scan.
pub fn simulate_dataset(
    world: &OccupancyWorld,
    world_path: &str,
    sensor: &SensorConfig,
    n_poses: usize,
    rot_max: f64,
    trans_mean: f64,
    seed: u64,
) -> Result<SimDataset> {
    sensor.validate()?;
    let poses = sample_trajectory(world, n_poses, rot_max, trans_mean, seed)?;
    let mut frames = Vec::with_capacity(poses.len());
    for pose in poses {
        frames.push(Frame { pose, points: scan(world, &pose, sensor)? });
    }
    Ok(SimDataset {
        world: world_path.to_string(),
        seed,
        sensor: *sensor,
        perturbation: Some(Perturbation { rot_max_deg: rot_max.to_degrees(), trans_mean }),
        frames,
    })
}

pub fn save_dataset(path: &Path, dataset: &SimDataset) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(dataset)?)?;
    Ok(())
}

pub fn load_dataset(path: &Path) -> Result<SimDataset> {
    let text = std::fs::read_to_string(path)?;
    let ds: SimDataset = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    if ds.frames.is_empty() {
        return Err(Error::Parse { path: path.display().to_string(), msg: "dataset has no frames".into() });
    }
    for (i, f) in ds.frames.iter().enumerate() {
        if f.points.len() != ds.sensor.n_beams {
            return Err(Error::Parse {
                path: path.display().to_string(),
                msg: format!(
                    "frame {i} has {} points, sensor declares {}",
                    f.points.len(),
                    ds.sensor.n_beams
                ),
            });
        }
    }
    Ok(ds)
}
