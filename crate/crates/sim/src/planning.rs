//! Wall-clock budgeted planning.

use std::time::{Duration, Instant};

use flightcore::world::{plan_path, OccupancyCloud, PathQuery, PlanOutcome, RrtConfig};

use crate::error::SimError;

/// Runs the planner until it succeeds or `query.time_budget` seconds pass.
pub fn plan_with_deadline(
    cloud: &OccupancyCloud,
    query: &PathQuery,
    seed: u64,
    config: &RrtConfig,
) -> Result<(PlanOutcome, Duration), SimError> {
    if !(query.time_budget.is_finite() && query.time_budget > 0.0) {
        return Err(SimError::Argument("time budget must be finite and > 0".into()));
    }
    let start = Instant::now();
    let budget = Duration::from_secs_f64(query.time_budget);
    let mut deadline = || start.elapsed() >= budget;
    let outcome = plan_path(cloud, query, seed, config, &mut deadline)?;
    Ok((outcome, start.elapsed()))
}
