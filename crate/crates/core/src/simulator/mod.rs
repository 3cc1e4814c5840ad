//! 2D Lidar simulation: binary occupancy worlds, exact grid ray casting,
//! random-walk trajectories, and dataset serialization.

mod dataset;
mod pgm;
mod ray;
mod scan;
mod world;

pub use dataset::{
    load_dataset, save_dataset, simulate_dataset, Frame, Perturbation, SensorConfig, SimDataset,
};
pub use pgm::{read_pgm, read_pgm_image, write_pgm, write_pgm_image, write_pgm_image_commented};
pub use ray::cast_ray;
pub use scan::{draw_step, sample_trajectory, scan};
pub use world::{generate_world, OccupancyWorld};
