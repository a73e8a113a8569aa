//! Throughput sweep over batch sizes and worker counts.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use flightcore::rng::stream;
use flightcore::{Command, Integrator, QuadParams};
use rand::Rng;

use crate::error::SimError;
use crate::vecenv::{ParamsSource, VecSim, VecSimConfig};

pub const CSV_HEADER: &str = "n_envs,n_workers,dt,method,steps_per_second";

/// Pre-generated action batches cycled through during a run.
const ACTION_BATCHES: usize = 64;
/// Batch steps between resets. Sustained random thrusts spin the vehicles
/// up without bound, so runs are cut into episodes of this length.
pub const EPISODE_STEPS: u64 = 250;

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub n_envs: Vec<usize>,
    pub n_workers: Vec<usize>,
    pub dt: f64,
    pub method: Integrator,
    /// Wall-clock time spent stepping per sweep point.
    pub duration: Duration,
    pub seed: u64,
    pub params: QuadParams,
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.n_envs.is_empty() || self.n_envs.contains(&0) {
            return Err(SimError::Argument("env counts must be non-empty and >= 1".into()));
        }
        if self.n_workers.is_empty() || self.n_workers.contains(&0) {
            return Err(SimError::Argument("worker counts must be non-empty and >= 1".into()));
        }
        if self.duration.is_zero() {
            return Err(SimError::Argument("duration must be > 0".into()));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(SimError::Argument("dt must be finite and > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub n_envs: usize,
    pub n_workers: usize,
    pub dt: f64,
    pub method: Integrator,
    pub steps_per_second: f64,
    /// Batch steps taken during the measurement.
    pub batch_steps: u64,
}

impl BenchRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{:.1}",
            self.n_envs, self.n_workers, self.dt, self.method, self.steps_per_second
        )
    }
}

/// Steps `n_envs` vehicles with uniformly random rotor thrusts for `duration`.
///
/// Environment steps per second are counted over the stepping loop only;
/// action generation happens up front. The batch is reset every
/// [`EPISODE_STEPS`] steps and reset time is part of the measurement.
pub fn measure(
    n_envs: usize,
    n_workers: usize,
    config: &BenchConfig,
) -> Result<BenchRow, SimError> {
    let mut sim = VecSim::new(VecSimConfig {
        n_envs,
        n_workers,
        dt: config.dt,
        method: config.method,
        base_seed: config.seed,
        params: ParamsSource::Shared(config.params),
        ..VecSimConfig::default()
    })?;
    sim.reset()?;
    let mut rng = stream(config.seed, u64::MAX);
    let (lo, hi) = (config.params.thrust_min, config.params.thrust_max);
    let batches: Vec<Vec<Command>> = (0..ACTION_BATCHES)
        .map(|_| {
            (0..n_envs)
                .map(|_| Command::RotorThrusts(std::array::from_fn(|_| rng.random_range(lo..=hi))))
                .collect()
        })
        .collect();

    let start = Instant::now();
    let mut steps = 0u64;
    while start.elapsed() < config.duration {
        sim.step(&batches[steps as usize % ACTION_BATCHES])?;
        steps += 1;
        if steps % EPISODE_STEPS == 0 {
            sim.reset()?;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok(BenchRow {
        n_envs,
        n_workers,
        dt: config.dt,
        method: config.method,
        steps_per_second: (steps * n_envs as u64) as f64 / secs,
        batch_steps: steps,
    })
}

/// Runs every `(n_envs, n_workers)` pair, in that nesting order.
pub fn sweep(config: &BenchConfig) -> Result<Vec<BenchRow>, SimError> {
    config.validate()?;
    let mut rows = Vec::with_capacity(config.n_envs.len() * config.n_workers.len());
    for &n in &config.n_envs {
        for &w in &config.n_workers {
            rows.push(measure(n, w, config)?);
        }
    }
    Ok(rows)
}

/// CSV text: header plus one line per row.
pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{}", r.csv());
    }
    out
}

pub fn peak(rows: &[BenchRow]) -> Option<&BenchRow> {
    rows.iter().max_by(|a, b| a.steps_per_second.total_cmp(&b.steps_per_second))
}
