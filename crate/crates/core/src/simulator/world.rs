use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A binary grid map. Cell `(ix, iy)` covers the continuous square
/// `[ix, ix+1) × [iy, iy+1)` in pixel coordinates; `iy` is the PGM row.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyWorld {
    width: usize,
    height: usize,
    occupied: Vec<bool>,
}

impl OccupancyWorld {
    pub fn new(width: usize, height: usize, occupied: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 || occupied.len() != width * height {
            return Err(Error::InvalidArgument {
                op: "occupancy_world",
                msg: format!("{}x{} grid needs {} cells, got {}", width, height, width * height, occupied.len()),
            });
        }
        if occupied.iter().all(|&o| o) {
            return Err(Error::InvalidArgument {
                op: "occupancy_world",
                msg: "world has no free cell".into(),
            });
        }
        Ok(OccupancyWorld { width, height, occupied })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        OccupancyWorld { width, height, occupied: vec![false; width * height] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cells(&self) -> &[bool] {
        &self.occupied
    }

    pub fn is_occupied(&self, ix: usize, iy: usize) -> bool {
        self.occupied[iy * self.width + ix]
    }

    pub(crate) fn set_occupied(&mut self, ix: usize, iy: usize) {
        self.occupied[iy * self.width + ix] = true;
    }

    /// Whether the cell containing a continuous point is occupied.
    /// Points outside the grid count as occupied.
    pub fn occupied_at(&self, p: [f64; 2]) -> bool {
        if p[0] < 0.0 || p[1] < 0.0 || p[0] >= self.width as f64 || p[1] >= self.height as f64 {
            return true;
        }
        self.is_occupied(p[0] as usize, p[1] as usize)
    }

    pub fn free_fraction(&self) -> f64 {
        let free = self.occupied.iter().filter(|&&o| !o).count();
        free as f64 / self.occupied.len() as f64
    }

    /// Mask of the largest 4-connected free region and its cell fraction.
    pub fn largest_free_component(&self) -> (Vec<bool>, f64) {
        let (w, h) = (self.width, self.height);
        let mut label = vec![0u32; w * h]; // 0 = unvisited
        let mut best = (0u32, 0usize);
        let mut next = 1u32;
        let mut stack = Vec::new();
        for start in 0..w * h {
            if self.occupied[start] || label[start] != 0 {
                continue;
            }
            let id = next;
            next += 1;
            let mut size = 0usize;
            stack.push(start);
            label[start] = id;
            while let Some(i) = stack.pop() {
                size += 1;
                let (x, y) = (i % w, i / w);
                let mut visit = |j: usize| {
                    if !self.occupied[j] && label[j] == 0 {
                        label[j] = id;
                        stack.push(j);
                    }
                };
                if x > 0 {
                    visit(i - 1);
                }
                if x + 1 < w {
                    visit(i + 1);
                }
                if y > 0 {
                    visit(i - w);
                }
                if y + 1 < h {
                    visit(i + w);
                }
            }
            if size > best.1 {
                best = (id, size);
            }
        }
        let mask = label.iter().map(|&l| l == best.0 && best.0 != 0).collect();
        (mask, best.1 as f64 / (w * h) as f64)
    }
}

/// Procedural world: free background with random filled rectangles and
/// discs. Regenerates (bounded) until the largest connected free region
/// covers at least 25% of the cells.
pub fn generate_world(
    width: usize,
    height: usize,
    n_obstacles: usize,
    seed: u64,
) -> Result<OccupancyWorld> {
    if width < 32 || height < 32 {
        return Err(Error::InvalidArgument {
            op: "generate_world",
            msg: format!("dimensions must be at least 32, got {width}x{height}"),
        });
    }
    const ATTEMPTS: u64 = 40;
    for attempt in 0..ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
        let mut world = OccupancyWorld::empty(width, height);
        let span = width.min(height) as f64;
        for _ in 0..n_obstacles {
            if rng.gen_bool(0.5) {
                let cx = rng.gen_range(0.0..width as f64);
                let cy = rng.gen_range(0.0..height as f64);
                let hx = rng.gen_range(0.03..0.11) * span;
                let hy = rng.gen_range(0.03..0.11) * span;
                fill_cells(&mut world, |x, y| {
                    (x - cx).abs() <= hx && (y - cy).abs() <= hy
                });
            } else {
                let cx = rng.gen_range(0.0..width as f64);
                let cy = rng.gen_range(0.0..height as f64);
                let r = rng.gen_range(0.03..0.10) * span;
                fill_cells(&mut world, |x, y| {
                    (x - cx).powi(2) + (y - cy).powi(2) <= r * r
                });
            }
        }
        let (_, fraction) = world.largest_free_component();
        if fraction >= 0.25 {
            return Ok(world);
        }
    }
    Err(Error::WorldGeneration(format!(
        "no layout with a 25% connected free region in {ATTEMPTS} attempts (seed {seed})"
    )))
}

/// Mark occupied every cell whose center satisfies the predicate.
fn fill_cells(world: &mut OccupancyWorld, inside: impl Fn(f64, f64) -> bool) {
    for iy in 0..world.height() {
        for ix in 0..world.width() {
            if inside(ix as f64 + 0.5, iy as f64 + 0.5) {
                world.set_occupied(ix, iy);
            }
        }
    }
}
