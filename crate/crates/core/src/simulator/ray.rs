use crate::error::{Error, Result};
use crate::simulator::OccupancyWorld;

/// First intersection of a ray with an obstacle-cell boundary, or with the
/// image boundary if nothing is hit. The returned point is continuous
/// (sub-pixel). With a finite `max_range` the ray is truncated at that
/// distance.
pub fn cast_ray(
    world: &OccupancyWorld,
    origin: [f64; 2],
    direction: [f64; 2],
    max_range: Option<f64>,
) -> Result<[f64; 2]> {
    let norm = (direction[0] * direction[0] + direction[1] * direction[1]).sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::InvalidArgument { op: "cast_ray", msg: "zero or non-finite direction".into() });
    }
    let d = [direction[0] / norm, direction[1] / norm];
    if world.occupied_at(origin) {
        return Err(Error::OriginInObstacle { x: origin[0], y: origin[1] });
    }
    let (w, h) = (world.width() as f64, world.height() as f64);
    let t_exit = exit_distance(origin, d, w, h);
    let t_hit = grid_hit(world, origin, d, t_exit);
    let mut t = t_hit.unwrap_or(t_exit);
    if let Some(r) = max_range {
        t = t.min(r);
    }
    Ok([origin[0] + t * d[0], origin[1] + t * d[1]])
}

/// Distance along the ray at which it leaves the `[0,w]×[0,h]` rectangle.
fn exit_distance(o: [f64; 2], d: [f64; 2], w: f64, h: f64) -> f64 {
    let axis = |o: f64, d: f64, hi: f64| -> f64 {
        if d > 0.0 {
            (hi - o) / d
        } else if d < 0.0 {
            -o / d
        } else {
            f64::INFINITY
        }
    };
    axis(o[0], d[0], w).min(axis(o[1], d[1], h))
}

/// Distance to the first occupied-cell boundary strictly before `t_exit`,
/// by DDA grid traversal.
fn grid_hit(world: &OccupancyWorld, o: [f64; 2], d: [f64; 2], t_exit: f64) -> Option<f64> {
    let (w, h) = (world.width() as isize, world.height() as isize);
    let mut ix = (o[0] as isize).clamp(0, w - 1);
    let mut iy = (o[1] as isize).clamp(0, h - 1);

    let step = |d: f64| if d > 0.0 { 1isize } else { -1 };
    let (sx, sy) = (step(d[0]), step(d[1]));
    let delta = |d: f64| if d != 0.0 { 1.0 / d.abs() } else { f64::INFINITY };
    let (dx, dy) = (delta(d[0]), delta(d[1]));
    let first = |o: f64, i: isize, d: f64| -> f64 {
        if d > 0.0 {
            ((i + 1) as f64 - o) / d
        } else if d < 0.0 {
            (i as f64 - o) / d
        } else {
            f64::INFINITY
        }
    };
    let mut tx = first(o[0], ix, d[0]);
    let mut ty = first(o[1], iy, d[1]);

    loop {
        let t;
        if tx <= ty {
            t = tx;
            tx += dx;
            ix += sx;
        } else {
            t = ty;
            ty += dy;
            iy += sy;
        }
        if t >= t_exit || ix < 0 || iy < 0 || ix >= w || iy >= h {
            return None;
        }
        if world.is_occupied(ix as usize, iy as usize) {
            return Some(t);
        }
    }
}
