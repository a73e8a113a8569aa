//! Vectorized simulation of independent quadrotors.
//!
//! Every environment owns its vehicle model, state and random stream
//! `stream(base_seed, env_id)`. A step touches only the environment's own
//! data, so results are bit-identical for any worker count. Environments are
//! split into `n_workers` contiguous chunks, one per worker.
//!
//! With a [`TaskSpec`] attached, each step also yields observations, rewards
//! and termination flags. Finished environments are reset immediately from
//! their own stream; the observation and state that ended the episode are
//! kept in [`BatchResult::terminal_observations`] and
//! [`BatchResult::terminal_states`].

use std::time::Instant;

use flightcore::rng::{stream, SimRng};
use flightcore::tasks::{InitSampler, TaskSpec, Termination};
use flightcore::{
    imu_measure, Command, Dynamics, ImuNoiseModel, ImuReading, Integrator, QuadModel, QuadParams,
    QuadState, RateGains, Vector3,
};
use rayon::prelude::*;
use rayon::ThreadPool;

use crate::error::SimError;

/// Vehicle parameters for the batch.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamsSource {
    Shared(QuadParams),
    /// One entry per environment.
    PerEnv(Vec<QuadParams>),
}

impl Default for ParamsSource {
    fn default() -> Self {
        ParamsSource::Shared(QuadParams::default())
    }
}

#[derive(Debug, Clone)]
pub struct VecSimConfig {
    pub n_envs: usize,
    /// Seconds.
    pub dt: f64,
    pub method: Integrator,
    pub n_workers: usize,
    pub base_seed: u64,
    pub params: ParamsSource,
    pub gains: RateGains,
    pub imu: ImuNoiseModel,
    /// `None` runs raw dynamics: no rewards, and `done` is always false.
    pub task: Option<TaskSpec>,
    pub sampler: InitSampler,
}

impl Default for VecSimConfig {
    fn default() -> Self {
        Self {
            n_envs: 1,
            dt: 0.02,
            method: Integrator::Rk4,
            n_workers: 1,
            base_seed: 0,
            params: ParamsSource::default(),
            gains: RateGains::default(),
            imu: ImuNoiseModel::noise_free(),
            task: None,
            sampler: InitSampler::fixed(Vector3::new(0.0, 0.0, 5.0)),
        }
    }
}

impl VecSimConfig {
    /// Configuration running `task` with the task's own step and sampler.
    pub fn for_task(task: TaskSpec, n_envs: usize, n_workers: usize, base_seed: u64) -> Self {
        Self {
            n_envs,
            n_workers,
            base_seed,
            dt: task.dt,
            sampler: task.sampler,
            task: Some(task),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.n_envs == 0 {
            return Err(SimError::Argument("n_envs must be >= 1".into()));
        }
        if self.n_workers == 0 {
            return Err(SimError::Argument("n_workers must be >= 1".into()));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(SimError::Argument(format!("dt must be finite and > 0, got {}", self.dt)));
        }
        match &self.params {
            ParamsSource::Shared(p) => p.validate()?,
            ParamsSource::PerEnv(list) => {
                if list.len() != self.n_envs {
                    return Err(SimError::Argument(format!(
                        "{} per-env parameter sets for {} envs",
                        list.len(),
                        self.n_envs
                    )));
                }
                for p in list {
                    p.validate()?;
                }
            }
        }
        self.gains.validate()?;
        self.imu.validate()?;
        self.sampler.validate()?;
        if let Some(task) = &self.task {
            task.validate()?;
            if task.dt != self.dt {
                return Err(SimError::Argument(format!(
                    "task dt {} differs from simulation dt {}",
                    task.dt, self.dt
                )));
            }
        }
        Ok(())
    }
}

/// Output of one reset or step. Every list holds one entry per environment.
#[derive(Debug, Clone, Default)]
pub struct BatchResult {
    pub states: Vec<QuadState>,
    pub imu: Vec<ImuReading>,
    pub done: Vec<bool>,
    /// Environments advanced per wall-clock second during the last call.
    pub steps_per_second: f64,
    /// Zero in raw mode.
    pub rewards: Vec<f64>,
    pub terminations: Vec<Termination>,
    /// Row-major `n_envs × obs_dim`; empty in raw mode.
    pub observations: Vec<f64>,
    pub obs_dim: usize,
    pub terminal_observations: Vec<Option<Vec<f64>>>,
    pub terminal_states: Vec<Option<QuadState>>,
}

impl BatchResult {
    fn with_len(n: usize, obs_dim: usize) -> Self {
        Self {
            states: vec![QuadState::default(); n],
            imu: vec![ImuReading::default(); n],
            done: vec![false; n],
            steps_per_second: 0.0,
            rewards: vec![0.0; n],
            terminations: vec![Termination::default(); n],
            observations: vec![0.0; n * obs_dim],
            obs_dim,
            terminal_observations: vec![None; n],
            terminal_states: vec![None; n],
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Observation row of environment `i`.
    pub fn observation(&self, i: usize) -> &[f64] {
        &self.observations[i * self.obs_dim..(i + 1) * self.obs_dim]
    }
}

#[derive(Debug, Clone)]
struct Env {
    model: QuadModel,
    state: QuadState,
    rng: SimRng,
}

/// Per-environment output slots handed to one worker.
struct Out<'a> {
    state: &'a mut QuadState,
    imu: &'a mut ImuReading,
    done: &'a mut bool,
    reward: &'a mut f64,
    termination: &'a mut Termination,
    obs: &'a mut [f64],
    terminal_obs: &'a mut Option<Vec<f64>>,
    terminal_state: &'a mut Option<QuadState>,
}

struct Shared<'a> {
    dt: f64,
    method: Integrator,
    gains: &'a RateGains,
    imu: &'a ImuNoiseModel,
    task: Option<&'a TaskSpec>,
    sampler: &'a InitSampler,
}

impl Shared<'_> {
    fn failed_rotor(&self) -> Option<usize> {
        self.task.and_then(|t| t.failed_rotor())
    }

    fn reset(&self, env: &mut Env, out: &mut Out<'_>) -> flightcore::Result<()> {
        env.state = self.sampler.sample(&mut env.rng, env.model.params(), self.failed_rotor());
        let hold = env.state.thrusts;
        let deriv = env.model.derivative(&env.state, &hold)?;
        *out.imu = imu_measure(&env.state, &deriv, env.model.params(), self.imu, &mut env.rng);
        *out.state = env.state;
        if let Some(task) = self.task {
            task.observe_into(&env.state, out.obs);
        }
        Ok(())
    }

    fn step(&self, env: &mut Env, cmd: &Command, out: &mut Out<'_>) -> flightcore::Result<()> {
        let mut f_des = cmd.thrusts(&env.state, &env.model, self.gains)?;
        if let Some(i) = self.failed_rotor() {
            f_des[i] = 0.0;
        }
        let prev = env.state;
        env.state = env.model.step(&prev, &f_des, self.dt, self.method)?;
        let deriv = env.model.derivative(&env.state, &f_des)?;
        *out.imu = imu_measure(&env.state, &deriv, env.model.params(), self.imu, &mut env.rng);
        *out.terminal_obs = None;
        *out.terminal_state = None;

        let Some(task) = self.task else {
            *out.state = env.state;
            *out.done = false;
            *out.reward = 0.0;
            *out.termination = Termination::default();
            return Ok(());
        };
        let flags = task.check_termination(&env.state, &prev, env.state.time);
        *out.termination = flags;
        *out.reward = task.reward(&env.state, &flags);
        *out.done = flags.done();
        if flags.done() {
            *out.terminal_obs = Some(task.observe(&env.state));
            *out.terminal_state = Some(env.state);
            self.reset(env, out)
        } else {
            *out.state = env.state;
            task.observe_into(&env.state, out.obs);
            Ok(())
        }
    }
}

/// A batch of independent simulated quadrotors.
pub struct VecSim {
    config: VecSimConfig,
    envs: Vec<Env>,
    scratch: Vec<Env>,
    result: BatchResult,
    pool: Option<ThreadPool>,
    is_reset: bool,
    total_steps: u64,
    total_seconds: f64,
}

impl std::fmt::Debug for VecSim {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VecSim")
            .field("n_envs", &self.config.n_envs)
            .field("n_workers", &self.config.n_workers)
            .field("is_reset", &self.is_reset)
            .finish_non_exhaustive()
    }
}

impl VecSim {
    pub fn new(config: VecSimConfig) -> Result<Self, SimError> {
        config.validate()?;
        let n = config.n_envs;
        let envs = (0..n)
            .map(|i| {
                let params = match &config.params {
                    ParamsSource::Shared(p) => *p,
                    ParamsSource::PerEnv(list) => list[i],
                };
                Ok(Env {
                    model: QuadModel::new(params)?,
                    state: QuadState::default(),
                    rng: stream(config.base_seed, i as u64),
                })
            })
            .collect::<Result<Vec<_>, SimError>>()?;
        let pool = if config.n_workers > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(config.n_workers)
                    .build()
                    .map_err(|e| SimError::Argument(format!("cannot start worker pool: {e}")))?,
            )
        } else {
            None
        };
        let obs_dim = config.task.as_ref().map_or(0, |t| t.obs_dim());
        Ok(Self {
            scratch: envs.clone(),
            envs,
            result: BatchResult::with_len(n, obs_dim),
            pool,
            config,
            is_reset: false,
            total_steps: 0,
            total_seconds: 0.0,
        })
    }

    pub fn config(&self) -> &VecSimConfig {
        &self.config
    }

    pub fn n_envs(&self) -> usize {
        self.config.n_envs
    }

    pub fn result(&self) -> &BatchResult {
        &self.result
    }

    pub fn states(&self) -> &[QuadState] {
        &self.result.states
    }

    /// Vehicle model of environment `i`.
    pub fn model(&self, i: usize) -> &QuadModel {
        &self.envs[i].model
    }

    /// Mean environment steps per second over every `step` call so far.
    pub fn mean_steps_per_second(&self) -> f64 {
        if self.total_seconds > 0.0 {
            self.total_steps as f64 / self.total_seconds
        } else {
            0.0
        }
    }

    /// Draws every initial state from the sampler.
    pub fn reset(&mut self) -> Result<&BatchResult, SimError> {
        let start = Instant::now();
        self.run_batch(None)?;
        self.result.done.fill(false);
        self.result.rewards.fill(0.0);
        self.result.terminations.fill(Termination::default());
        self.result.terminal_observations.fill(None);
        self.result.terminal_states.fill(None);
        self.is_reset = true;
        self.result.steps_per_second = rate(self.config.n_envs, start);
        Ok(&self.result)
    }

    /// Replaces every state, e.g. to start from known conditions. Random
    /// streams are not touched.
    pub fn set_states(&mut self, states: &[QuadState]) -> Result<&BatchResult, SimError> {
        if states.len() != self.config.n_envs {
            return Err(SimError::Argument(format!(
                "{} states for {} envs",
                states.len(),
                self.config.n_envs
            )));
        }
        for (i, s) in states.iter().enumerate() {
            s.check_finite()
                .map_err(|e| SimError::Argument(format!("state {i}: {e}")))?;
        }
        for (i, (env, s)) in self.envs.iter_mut().zip(states).enumerate() {
            env.state = *s;
            let deriv = env.model.derivative(s, &s.thrusts)?;
            self.result.imu[i] = ImuReading {
                accel: s.attitude().inverse_transform_vector(
                    &(deriv.velocity + Vector3::new(0.0, 0.0, env.model.params().gravity)),
                ),
                gyro: s.body_rates,
                time: s.time,
            };
            self.result.states[i] = *s;
            if let Some(task) = &self.config.task {
                task.observe_into(s, &mut self.result.observations[i * task.obs_dim()..(i + 1) * task.obs_dim()]);
            }
        }
        self.result.done.fill(false);
        self.result.terminal_observations.fill(None);
        self.result.terminal_states.fill(None);
        self.is_reset = true;
        Ok(&self.result)
    }

    /// Advances every environment by one step.
    ///
    /// On error no environment state changes.
    pub fn step(&mut self, commands: &[Command]) -> Result<&BatchResult, SimError> {
        if !self.is_reset {
            return Err(SimError::Argument("step called before reset".into()));
        }
        if commands.len() != self.config.n_envs {
            return Err(SimError::Argument(format!(
                "{} commands for {} envs",
                commands.len(),
                self.config.n_envs
            )));
        }
        for (i, c) in commands.iter().enumerate() {
            c.validate()
                .map_err(|e| SimError::Argument(format!("command {i}: {e}")))?;
        }
        let start = Instant::now();
        self.run_batch(Some(commands))?;
        let elapsed = start.elapsed().as_secs_f64();
        self.total_steps += self.config.n_envs as u64;
        self.total_seconds += elapsed;
        self.result.steps_per_second = rate(self.config.n_envs, start);
        Ok(&self.result)
    }

    /// Resets (`commands == None`) or steps into `scratch`, committing only on success.
    fn run_batch(&mut self, commands: Option<&[Command]>) -> Result<(), SimError> {
        self.scratch.clone_from(&self.envs);
        let shared = Shared {
            dt: self.config.dt,
            method: self.config.method,
            gains: &self.config.gains,
            imu: &self.config.imu,
            task: self.config.task.as_ref(),
            sampler: &self.config.sampler,
        };
        let r = &mut self.result;
        let obs_dim = r.obs_dim;
        let n = self.config.n_envs;
        let chunk = n.div_ceil(self.config.n_workers);

        let run_chunk = |(k, (envs, states, imu, done, rewards, terms, obs, tobs, tstates)): (
            usize,
            (
                &mut [Env],
                &mut [QuadState],
                &mut [ImuReading],
                &mut [bool],
                &mut [f64],
                &mut [Termination],
                &mut [f64],
                &mut [Option<Vec<f64>>],
                &mut [Option<QuadState>],
            ),
        )|
         -> flightcore::Result<()> {
            for j in 0..envs.len() {
                let mut out = Out {
                    state: &mut states[j],
                    imu: &mut imu[j],
                    done: &mut done[j],
                    reward: &mut rewards[j],
                    termination: &mut terms[j],
                    obs: &mut obs[j * obs_dim..(j + 1) * obs_dim],
                    terminal_obs: &mut tobs[j],
                    terminal_state: &mut tstates[j],
                };
                match commands {
                    None => shared.reset(&mut envs[j], &mut out)?,
                    Some(c) => shared.step(&mut envs[j], &c[k * chunk + j], &mut out)?,
                }
            }
            Ok(())
        };

        let obs_chunk = (chunk * obs_dim).max(1);
        let outcome = match &self.pool {
            None => run_chunk((
                0,
                (
                    &mut self.scratch[..],
                    &mut r.states[..],
                    &mut r.imu[..],
                    &mut r.done[..],
                    &mut r.rewards[..],
                    &mut r.terminations[..],
                    &mut r.observations[..],
                    &mut r.terminal_observations[..],
                    &mut r.terminal_states[..],
                ),
            )),
            Some(pool) => {
                let scratch = &mut self.scratch;
                pool.install(|| {
                    let mut results: Vec<flightcore::Result<()>> = Vec::new();
                    (
                        scratch.par_chunks_mut(chunk),
                        r.states.par_chunks_mut(chunk),
                        r.imu.par_chunks_mut(chunk),
                        r.done.par_chunks_mut(chunk),
                        r.rewards.par_chunks_mut(chunk),
                        r.terminations.par_chunks_mut(chunk),
                        obs_chunks(&mut r.observations, obs_chunk, n.div_ceil(chunk)),
                        r.terminal_observations.par_chunks_mut(chunk),
                        r.terminal_states.par_chunks_mut(chunk),
                    )
                        .into_par_iter()
                        .enumerate()
                        .map(run_chunk)
                        .collect_into_vec(&mut results);
                    results.into_iter().collect::<flightcore::Result<()>>()
                })
            }
        };
        outcome?;
        std::mem::swap(&mut self.envs, &mut self.scratch);
        Ok(())
    }
}

/// Observation chunks aligned with the env chunks; empty slices in raw mode.
fn obs_chunks(obs: &mut [f64], size: usize, count: usize) -> rayon::vec::IntoIter<&mut [f64]> {
    let mut parts: Vec<&mut [f64]> = if obs.is_empty() {
        Vec::new()
    } else {
        obs.chunks_mut(size).collect()
    };
    parts.resize_with(count, Default::default);
    parts.into_par_iter()
}

fn rate(n: usize, start: Instant) -> f64 {
    let secs = start.elapsed().as_secs_f64();
    if secs > 0.0 {
        n as f64 / secs
    } else {
        f64::INFINITY
    }
}

/// Order-sensitive FNV-1a digest over every field of every state.
pub fn state_digest(states: &[QuadState]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut feed = |v: f64| {
        for b in v.to_bits().to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    for s in states {
        s.position.iter().for_each(|v| feed(*v));
        s.orientation.coords.iter().for_each(|v| feed(*v));
        s.velocity.iter().for_each(|v| feed(*v));
        s.body_rates.iter().for_each(|v| feed(*v));
        s.thrusts.iter().for_each(|v| feed(*v));
        feed(s.time);
    }
    h
}
