//! Seeded synthetic forest: vertical trunk shells on a jittered lattice with
//! a few straight branches each.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use nalgebra::Vector3;
use rand::Rng;

use super::{Aabb, OccupancyCloud};
use crate::error::{Error, Result};
use crate::rng;

/// Lattice spacing of candidate trunk sites, meters.
pub const TRUNK_SPACING: f64 = 2.0;

const TRUNK_RADIUS: (f64, f64) = (0.15, 0.35);
const MAX_BRANCHES: u32 = 3;

/// Generates a forest inside `bounds`.
///
/// `density` is the probability that a lattice site (one per
/// [`TRUNK_SPACING`]² of ground) holds a trunk. Points are cell centers, so
/// the result is deduplicated on the occupancy grid.
pub fn generate_forest(bounds: Aabb, resolution: f64, density: f64, seed: u64) -> Result<OccupancyCloud> {
    bounds.check_solid()?;
    let dims = bounds.cell_dims(resolution)?;
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::arg("density must lie in [0, 1]"));
    }

    let mut rng = rng::stream(seed, 0);
    let ext = bounds.extent();
    let sites_x = libm::floor(ext.x / TRUNK_SPACING).max(1.0) as u32;
    let sites_y = libm::floor(ext.y / TRUNK_SPACING).max(1.0) as u32;
    let site_w = Vector3::new(ext.x / f64::from(sites_x), ext.y / f64::from(sites_y), 0.0);

    let mut keys: Vec<[u32; 3]> = Vec::new();
    let mut layer: Vec<(i64, i64)> = Vec::new();
    let cell_of = |v: f64, axis: usize| libm::floor((v - bounds.min[axis]) / resolution) as i64;

    for ix in 0..sites_x {
        for iy in 0..sites_y {
            if density == 0.0 || rng.random::<f64>() >= density {
                continue;
            }
            let cx = bounds.min.x + (f64::from(ix) + 0.5) * site_w.x + rng.random_range(-0.25..=0.25) * site_w.x;
            let cy = bounds.min.y + (f64::from(iy) + 0.5) * site_w.y + rng.random_range(-0.25..=0.25) * site_w.y;
            let radius = rng.random_range(TRUNK_RADIUS.0..=TRUNK_RADIUS.1);
            let top = bounds.min.z + ext.z * rng.random_range(0.7..=1.0);

            // Cross-section shell, then extruded over every z layer.
            layer.clear();
            let shell = 0.75 * resolution;
            let (x0, x1) = (cell_of(cx - radius - shell, 0), cell_of(cx + radius + shell, 0));
            let (y0, y1) = (cell_of(cy - radius - shell, 1), cell_of(cy + radius + shell, 1));
            for gx in x0..=x1 {
                for gy in y0..=y1 {
                    let px = bounds.min.x + (gx as f64 + 0.5) * resolution;
                    let py = bounds.min.y + (gy as f64 + 0.5) * resolution;
                    let d = libm::hypot(px - cx, py - cy);
                    if (d - radius).abs() <= shell {
                        layer.push((gx, gy));
                    }
                }
            }
            let z_top = cell_of(top, 2);
            for gz in 0..=z_top {
                for &(gx, gy) in &layer {
                    push_key(&mut keys, dims, gx, gy, gz);
                }
            }

            let n_branches = rng.random_range(0..=MAX_BRANCHES);
            for _ in 0..n_branches {
                let z = bounds.min.z + (top - bounds.min.z) * rng.random_range(0.3..=0.95);
                let azimuth = rng.random_range(0.0..TAU);
                let length = rng.random_range(0.5..=1.5);
                let rise = rng.random_range(0.0..=0.3);
                let dir = Vector3::new(libm::cos(azimuth), libm::sin(azimuth), rise);
                let start = Vector3::new(cx, cy, z) + Vector3::new(dir.x, dir.y, 0.0) * radius;
                let steps = libm::ceil(length / (0.5 * resolution)) as u32;
                for s in 0..=steps {
                    let p = start + dir * (length * f64::from(s) / f64::from(steps));
                    push_key(&mut keys, dims, cell_of(p.x, 0), cell_of(p.y, 1), cell_of(p.z, 2));
                }
            }
        }
    }

    keys.sort_unstable();
    keys.dedup();
    let points = keys
        .into_iter()
        .map(|k| {
            let c = |axis: usize| (bounds.min[axis] + (f64::from(k[axis]) + 0.5) * resolution) as f32;
            [c(0), c(1), c(2)]
        })
        .filter(|p| bounds.contains(&super::to_vec(p)))
        .collect();
    OccupancyCloud::new(points, resolution, bounds)
}

fn push_key(keys: &mut Vec<[u32; 3]>, dims: [u32; 3], x: i64, y: i64, z: i64) {
    let inside = |v: i64, n: u32| v >= 0 && v < i64::from(n);
    if inside(x, dims[0]) && inside(y, dims[1]) && inside(z, dims[2]) {
        keys.push([x as u32, y as u32, z as u32]);
    }
}
