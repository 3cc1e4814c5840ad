//! Render the continuous occupancy field as a grid map image.

use std::path::Path;

use crate::autodiff::{Graph, Tensor, Var};
use crate::error::{Error, Result};
use crate::model::MNet;
use crate::simulator::write_pgm_image;

pub const MAP_OCCUPIED: u8 = 0;
pub const MAP_FREE: u8 = 255;
pub const MAP_UNEXPLORED: u8 = 128;

/// A rasterized occupancy map. Pixel values are [`MAP_OCCUPIED`],
/// [`MAP_FREE`], or [`MAP_UNEXPLORED`]; rows are stored top to bottom in
/// increasing `y`, matching the simulator's world convention.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MapImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl MapImage {
    pub fn pixel(&self, ix: usize, iy: usize) -> u8 {
        self.pixels[iy * self.width + ix]
    }
}

/// Mark every cell whose center lies within `radius` of any of the given
/// points. Cells outside the mask render as unexplored.
pub fn explored_mask(
    bounds: [f64; 4],
    width: usize,
    height: usize,
    point_sets: &[&[[f64; 2]]],
    radius: f64,
) -> Vec<bool> {
    let [x_min, y_min, x_max, y_max] = bounds;
    let sx = (x_max - x_min) / width as f64;
    let sy = (y_max - y_min) / height as f64;
    let mut mask = vec![false; width * height];
    let r2 = radius * radius;
    for points in point_sets {
        for p in *points {
            let cx = (p[0] - x_min) / sx - 0.5;
            let cy = (p[1] - y_min) / sy - 0.5;
            let reach_x = (radius / sx).ceil() as isize + 1;
            let reach_y = (radius / sy).ceil() as isize + 1;
            for dy in -reach_y..=reach_y {
                let iy = cy.round() as isize + dy;
                if iy < 0 || iy >= height as isize {
                    continue;
                }
                for dx in -reach_x..=reach_x {
                    let ix = cx.round() as isize + dx;
                    if ix < 0 || ix >= width as isize {
                        continue;
                    }
                    let center_x = x_min + (ix as f64 + 0.5) * sx;
                    let center_y = y_min + (iy as f64 + 0.5) * sy;
                    let d2 = (center_x - p[0]).powi(2) + (center_y - p[1]).powi(2);
                    if d2 <= r2 {
                        mask[iy as usize * width + ix as usize] = true;
                    }
                }
            }
        }
    }
    mask
}

/// Query the occupancy network at every explored cell center and threshold
/// at 0.5 (`p >= 0.5` renders occupied). Unexplored cells stay gray.
pub fn rasterize_map(
    mnet: &MNet,
    bounds: [f64; 4],
    width: usize,
    height: usize,
    explored: &[bool],
) -> Result<MapImage> {
    let [x_min, y_min, x_max, y_max] = bounds;
    if width == 0 || height == 0 || x_max <= x_min || y_max <= y_min {
        return Err(Error::InvalidArgument {
            op: "rasterize_map",
            msg: format!("empty region {bounds:?} at {width}x{height}"),
        });
    }
    if explored.len() != width * height {
        return Err(Error::LengthMismatch {
            what: "explored mask vs image size",
            lhs: explored.len(),
            rhs: width * height,
        });
    }
    let sx = (x_max - x_min) / width as f64;
    let sy = (y_max - y_min) / height as f64;

    let queries: Vec<usize> = (0..width * height).filter(|&i| explored[i]).collect();
    let mut pixels = vec![MAP_UNEXPLORED; width * height];
    for chunk in queries.chunks(4096) {
        let mut coords = Vec::with_capacity(chunk.len() * 2);
        for &i in chunk {
            let (ix, iy) = (i % width, i / width);
            coords.push(x_min + (ix as f64 + 0.5) * sx);
            coords.push(y_min + (iy as f64 + 0.5) * sy);
        }
        let mut g = Graph::new();
        let vars: Vec<Var> =
            mnet.params().iter().map(|p| g.constant(p.value.clone())).collect();
        let input = g.constant(Tensor::new(vec![chunk.len(), 2], coords)?);
        let probs = mnet.forward(&mut g, &vars, input)?;
        for (&i, &p) in chunk.iter().zip(g.value(probs).data()) {
            pixels[i] = if p >= 0.5 { MAP_OCCUPIED } else { MAP_FREE };
        }
    }
    Ok(MapImage { width, height, pixels })
}

/// Write a rasterized map as a binary PGM file.
pub fn write_map_pgm(path: &Path, map: &MapImage) -> Result<()> {
    write_pgm_image(path, map.width, map.height, &map.pixels)
}
