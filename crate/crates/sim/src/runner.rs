//! Episode runner driving one task environment with a policy.

use std::io::{BufRead, Write};
use std::str::FromStr;

use flightcore::policy::{HoverController, Policy, RandomPolicy};
use flightcore::rng::{stream, SimRng};
use flightcore::tasks::TaskSpec;
use flightcore::{Error, ImuNoiseModel, Integrator, QuadModel, QuadParams, QuadState, RateGains};

use crate::error::SimError;
use crate::vecenv::{BatchResult, ParamsSource, VecSim, VecSimConfig};

/// Stream id of the random policy, kept clear of per-environment streams.
pub const POLICY_STREAM: u64 = 1 << 63;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerKind {
    Hover,
    Random,
    /// Actions read line by line from an external process.
    External,
}

impl FromStr for ControllerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hover" => Ok(Self::Hover),
            "random" => Ok(Self::Random),
            "external" => Ok(Self::External),
            other => Err(format!("unknown controller `{other}` (expected hover, random or external)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSummary {
    pub episode: usize,
    pub total_reward: f64,
    pub steps: u64,
    pub reason: &'static str,
}

impl EpisodeSummary {
    pub fn line(&self) -> String {
        format!(
            "episode={} return={:.9} steps={} reason={}",
            self.episode, self.total_reward, self.steps, self.reason
        )
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub task: TaskSpec,
    pub params: QuadParams,
    pub gains: RateGains,
    pub imu: ImuNoiseModel,
    pub method: Integrator,
    pub seed: u64,
    pub episodes: usize,
}

impl RunConfig {
    pub fn new(task: TaskSpec, seed: u64, episodes: usize) -> Self {
        Self {
            task,
            params: QuadParams::default(),
            gains: RateGains::default(),
            imu: ImuNoiseModel::noise_free(),
            method: Integrator::Rk4,
            seed,
            episodes,
        }
    }
}

/// Policy exchanging plain-text lines with an external controller.
///
/// For every step it writes `obs v1 v2 ...` to `output` and expects one line
/// of whitespace-separated action values on `input`.
pub struct LinePolicy<R, W> {
    input: R,
    output: W,
    line: String,
}

impl<R: BufRead, W: Write> LinePolicy<R, W> {
    pub fn new(input: R, output: W) -> Self {
        Self {
            input,
            output,
            line: String::new(),
        }
    }
}

impl<R: BufRead, W: Write> Policy for LinePolicy<R, W> {
    fn act(&mut self, state: &QuadState, spec: &TaskSpec, _model: &QuadModel, out: &mut [f64]) -> flightcore::Result<()> {
        let obs = spec.observe(state);
        let text: Vec<String> = obs.iter().map(|v| format!("{v:e}")).collect();
        writeln!(self.output, "obs {}", text.join(" "))
            .and_then(|_| self.output.flush())
            .map_err(|e| bad(format!("controller output: {e}")))?;
        self.line.clear();
        let n = self
            .input
            .read_line(&mut self.line)
            .map_err(|e| bad(format!("controller input: {e}")))?;
        if n == 0 {
            return Err(bad("controller closed its output".into()));
        }
        let values: Vec<f64> = self
            .line
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| bad(format!("controller sent a non-numeric action: `{}`", self.line.trim())))?;
        if values.len() != out.len() {
            return Err(bad(format!(
                "controller sent {} action values, expected {}",
                values.len(),
                out.len()
            )));
        }
        out.copy_from_slice(&values);
        Ok(())
    }
}

fn bad(reason: String) -> Error {
    Error::InvalidArgument(reason)
}

pub fn random_policy(seed: u64) -> RandomPolicy<SimRng> {
    RandomPolicy::new(stream(seed, POLICY_STREAM))
}

/// Runs `config.episodes` episodes back to back on one environment.
///
/// `on_step` sees every batch result, e.g. to publish states.
pub fn run_episodes(
    config: &RunConfig,
    policy: &mut dyn Policy,
    mut on_step: impl FnMut(&BatchResult),
) -> Result<Vec<EpisodeSummary>, SimError> {
    let mut summaries = Vec::with_capacity(config.episodes);
    if config.episodes == 0 {
        return Ok(summaries);
    }
    let mut sim = VecSim::new(VecSimConfig {
        method: config.method,
        params: ParamsSource::Shared(config.params),
        gains: config.gains,
        imu: config.imu,
        ..VecSimConfig::for_task(config.task.clone(), 1, 1, config.seed)
    })?;
    let spec = &config.task;
    let model = sim.model(0).clone();
    let mut state = sim.reset()?.states[0];
    let mut action = vec![0.0; spec.action_dim()];
    let (mut total, mut steps) = (0.0, 0u64);
    while summaries.len() < config.episodes {
        policy.act(&state, spec, &model, &mut action)?;
        let cmd = spec.command_from_action(&action)?;
        let r = sim.step(&[cmd])?;
        on_step(r);
        total += r.rewards[0];
        steps += 1;
        if r.done[0] {
            summaries.push(EpisodeSummary {
                episode: summaries.len(),
                total_reward: total,
                steps,
                reason: r.terminations[0].reason().unwrap_or("done"),
            });
            (total, steps) = (0.0, 0);
        }
        state = r.states[0];
    }
    Ok(summaries)
}

pub fn mean_return(summaries: &[EpisodeSummary]) -> f64 {
    if summaries.is_empty() {
        return 0.0;
    }
    summaries.iter().map(|s| s.total_reward).sum::<f64>() / summaries.len() as f64
}

/// Hover controller built with the run's rate gains.
pub fn hover_policy(config: &RunConfig) -> HoverController {
    HoverController {
        gains: config.gains,
        ..HoverController::default()
    }
}
