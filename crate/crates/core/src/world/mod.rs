//! Occupancy point clouds, collision queries and path planning.

mod forest;
mod index;
mod planner;

pub use forest::{generate_forest, TRUNK_SPACING};
pub use planner::{path_length, plan_path, IterationBudget, PathQuery, PlanBudget, PlanOutcome, RrtConfig};

use alloc::format;
use alloc::vec::Vec;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use index::GridIndex;

/// Axis-aligned box, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl Aabb {
    pub fn new(min: Vector3<f64>, max: Vector3<f64>) -> Self {
        Self { min, max }
    }

    pub fn extent(&self) -> Vector3<f64> {
        self.max - self.min
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    /// Tight box around `points`; a zero box at the origin when empty.
    pub fn enclosing(points: &[[f32; 3]]) -> Self {
        let Some(first) = points.first() else {
            return Self::new(Vector3::zeros(), Vector3::zeros());
        };
        let mut lo = to_vec(first);
        let mut hi = lo;
        for p in points {
            let v = to_vec(p);
            lo = lo.inf(&v);
            hi = hi.sup(&v);
        }
        Self::new(lo, hi)
    }

    fn is_finite(&self) -> bool {
        self.min.iter().chain(self.max.iter()).all(|v| v.is_finite())
    }

    /// Non-empty volume along every axis.
    pub fn check_solid(&self) -> Result<()> {
        if !self.is_finite() || (0..3).any(|i| self.max[i] <= self.min[i]) {
            return Err(Error::arg("bounds must be finite with max > min on every axis"));
        }
        Ok(())
    }

    /// Number of grid cells per axis at `resolution`.
    pub fn cell_dims(&self, resolution: f64) -> Result<[u32; 3]> {
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(Error::arg("resolution must be finite and > 0"));
        }
        let mut dims = [0u32; 3];
        for (i, d) in dims.iter_mut().enumerate() {
            let n = libm::ceil(self.extent()[i] / resolution).max(1.0);
            if n >= f64::from(i32::MAX) {
                return Err(Error::arg(format!(
                    "{n} cells along axis {i} exceed the addressable grid"
                )));
            }
            *d = n as u32;
        }
        Ok(dims)
    }

    pub fn cell_count(&self, resolution: f64) -> Result<u64> {
        let d = self.cell_dims(resolution)?;
        Ok(d.iter().map(|&n| u64::from(n)).product())
    }
}

pub(crate) fn to_vec(p: &[f32; 3]) -> Vector3<f64> {
    Vector3::new(f64::from(p[0]), f64::from(p[1]), f64::from(p[2]))
}

/// Immutable set of occupied points at a fixed resolution.
///
/// Invariants, checked on construction: `resolution > 0`, every point lies
/// inside `bounds`, and no two points are closer than `resolution / 2`.
#[derive(Debug, Clone)]
pub struct OccupancyCloud {
    points: Vec<[f32; 3]>,
    resolution: f64,
    bounds: Aabb,
    index: GridIndex,
}

impl OccupancyCloud {
    pub fn new(points: Vec<[f32; 3]>, resolution: f64, bounds: Aabb) -> Result<Self> {
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(Error::arg("resolution must be finite and > 0"));
        }
        if !bounds.is_finite() || (0..3).any(|i| bounds.max[i] < bounds.min[i]) {
            return Err(Error::arg("bounds must be finite with max >= min"));
        }
        if let Some(p) = points.iter().find(|p| !bounds.contains(&to_vec(p))) {
            return Err(Error::arg(format!("point {p:?} lies outside the bounds")));
        }
        let index = GridIndex::build(&points, bounds.min, resolution);
        let half = resolution / 2.0;
        for (i, p) in points.iter().enumerate() {
            if let Some(j) = index.find_within(&points, &to_vec(p), half, Some(i), true) {
                return Err(Error::arg(format!(
                    "points {i} and {j} are closer than half the resolution"
                )));
            }
        }
        Ok(Self {
            points,
            resolution,
            bounds,
            index,
        })
    }

    /// Empty cloud over `bounds`.
    pub fn empty(resolution: f64, bounds: Aabb) -> Result<Self> {
        Self::new(Vec::new(), resolution, bounds)
    }

    pub fn points(&self) -> &[[f32; 3]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn bounds(&self) -> &Aabb {
        &self.bounds
    }

    /// True iff some occupied point lies within `radius` of `point`.
    ///
    /// Negative or NaN radii never collide.
    pub fn collides(&self, point: &Vector3<f64>, radius: f64) -> bool {
        if !(radius >= 0.0) || self.points.is_empty() {
            return false;
        }
        self.index
            .find_within(&self.points, point, radius, None, false)
            .is_some()
    }

    /// Points inside `region`, same resolution, bounds set to `region`.
    pub fn crop(&self, region: &Aabb) -> Result<Self> {
        let pts = self
            .points
            .iter()
            .filter(|p| region.contains(&to_vec(p)))
            .copied()
            .collect();
        Self::new(pts, self.resolution, *region)
    }
}
