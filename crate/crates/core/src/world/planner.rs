//! RRT planner with greedy straight-line shortcutting.
//!
//! Segments are checked at `resolution / 2` spacing with the robot radius
//! inflated by `resolution / 4`, so the continuous segment between two
//! samples also clears the robot radius.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::Vector3;
use rand::Rng;

use super::OccupancyCloud;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathQuery {
    pub start: Vector3<f64>,
    pub goal: Vector3<f64>,
    pub robot_radius: f64,
    /// Wall-clock budget, seconds. Enforced by the caller's [`PlanBudget`].
    pub time_budget: f64,
}

/// Decides when the planner must give up.
pub trait PlanBudget {
    fn exhausted(&mut self) -> bool;
}

/// Budget counted in planner iterations.
#[derive(Debug, Clone, Copy)]
pub struct IterationBudget {
    pub remaining: u64,
}

impl IterationBudget {
    pub fn new(iterations: u64) -> Self {
        Self { remaining: iterations }
    }
}

impl PlanBudget for IterationBudget {
    fn exhausted(&mut self) -> bool {
        if self.remaining == 0 {
            return true;
        }
        self.remaining -= 1;
        false
    }
}

impl<F: FnMut() -> bool> PlanBudget for F {
    fn exhausted(&mut self) -> bool {
        self()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RrtConfig {
    /// Maximum edge length, meters.
    pub step: f64,
    pub goal_bias: f64,
    pub max_iterations: u64,
}

impl Default for RrtConfig {
    fn default() -> Self {
        Self {
            step: 1.5,
            goal_bias: 0.1,
            max_iterations: 200_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlanOutcome {
    /// Polyline from start to goal.
    Found(Vec<Vector3<f64>>),
    /// The budget ran out before the goal was connected.
    BudgetExhausted,
}

struct Checker<'a> {
    cloud: &'a OccupancyCloud,
    inflated: f64,
    spacing: f64,
}

impl Checker<'_> {
    fn point_free(&self, p: &Vector3<f64>) -> bool {
        !self.cloud.collides(p, self.inflated)
    }

    /// Checks interior samples of `a → b`, and `b` itself when `check_end`.
    fn segment_free(&self, a: &Vector3<f64>, b: &Vector3<f64>, check_end: bool) -> bool {
        let len = (b - a).norm();
        let n = libm::ceil(len / self.spacing).max(1.0) as u64;
        for i in 1..n {
            let p = a + (b - a) * (i as f64 / n as f64);
            if !self.point_free(&p) {
                return false;
            }
        }
        !check_end || self.point_free(b)
    }
}

/// Plans a collision-free polyline from `query.start` to `query.goal`.
///
/// Start and goal must lie inside the cloud bounds and clear the robot
/// radius; otherwise an error is returned. Running out of budget is a
/// normal [`PlanOutcome::BudgetExhausted`].
pub fn plan_path(
    cloud: &OccupancyCloud,
    query: &PathQuery,
    seed: u64,
    config: &RrtConfig,
    budget: &mut dyn PlanBudget,
) -> Result<PlanOutcome> {
    let r = query.robot_radius;
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::arg("robot radius must be finite and >= 0"));
    }
    if !(config.step > 0.0 && (0.0..=1.0).contains(&config.goal_bias)) {
        return Err(Error::arg("invalid planner configuration"));
    }
    for (name, p) in [("start", &query.start), ("goal", &query.goal)] {
        if !p.iter().all(|v| v.is_finite()) || !cloud.bounds().contains(p) {
            return Err(Error::arg(alloc::format!("{name} lies outside the map bounds")));
        }
        if cloud.collides(p, r) {
            return Err(Error::arg(alloc::format!("{name} is in collision")));
        }
    }

    let res = cloud.resolution();
    let check = Checker {
        cloud,
        inflated: r + 0.25 * res,
        spacing: 0.5 * res,
    };
    let (start, goal) = (query.start, query.goal);

    if check.segment_free(&start, &goal, false) {
        return Ok(PlanOutcome::Found(vec![start, goal]));
    }

    let b = cloud.bounds();
    let lo = b.min.map(|v| v + r);
    let hi = b.max.map(|v| v - r);
    let mut rng = rng::stream(seed, 1);
    let mut nodes = vec![start];
    let mut parents = vec![usize::MAX];

    for _ in 0..config.max_iterations {
        if budget.exhausted() {
            break;
        }
        let sample = if rng.random::<f64>() < config.goal_bias {
            goal
        } else {
            Vector3::from_fn(|i, _| {
                if hi[i] > lo[i] {
                    rng.random_range(lo[i]..=hi[i])
                } else {
                    0.5 * (b.min[i] + b.max[i])
                }
            })
        };
        let (nearest, d2) = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (i, (n - sample).norm_squared()))
            .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
        if d2 == 0.0 {
            continue;
        }
        let from = nodes[nearest];
        let dist = libm::sqrt(d2);
        let new = if dist > config.step {
            from + (sample - from) * (config.step / dist)
        } else {
            sample
        };
        let reaches_goal = new == goal;
        if !check.segment_free(&from, &new, !reaches_goal) {
            continue;
        }
        nodes.push(new);
        parents.push(nearest);
        let last = nodes.len() - 1;

        let connected = if reaches_goal {
            true
        } else if (goal - new).norm() <= config.step && check.segment_free(&new, &goal, false) {
            nodes.push(goal);
            parents.push(last);
            true
        } else {
            false
        };
        if connected {
            let mut path = Vec::new();
            let mut i = nodes.len() - 1;
            while i != usize::MAX {
                path.push(nodes[i]);
                i = parents[i];
            }
            path.reverse();
            return Ok(PlanOutcome::Found(shortcut(&check, &path)));
        }
    }
    Ok(PlanOutcome::BudgetExhausted)
}

/// Greedy shortcutting: from each kept vertex jump to the farthest vertex
/// reachable by a free straight segment.
fn shortcut(check: &Checker<'_>, path: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
    let mut out = vec![path[0]];
    let mut i = 0;
    while i + 1 < path.len() {
        let mut j = path.len() - 1;
        while j > i + 1 && !check.segment_free(&path[i], &path[j], false) {
            j -= 1;
        }
        out.push(path[j]);
        i = j;
    }
    out
}

/// Total polyline length.
pub fn path_length(path: &[Vector3<f64>]) -> f64 {
    path.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}
