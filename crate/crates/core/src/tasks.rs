//! Reinforcement-learning tasks: hover stabilization, stabilization with a
//! failed rotor, and flying through a circular gate.
//!
//! Observation layouts (attitude as roll/pitch/yaw):
//!
//! | task           | observation                          | dim | action            | dim |
//! |----------------|--------------------------------------|-----|-------------------|-----|
//! | stabilize      | `[p, θ, v, 1.0]`                     | 10  | `[c, ωx, ωy, ωz]` | 4   |
//! | motor failure  | `[p, θ, v, ω]`                       | 12  | `[f₁, f₂, f₃]`    | 3   |
//! | gate flight    | `[p, θ, v, ω, p_gate, θ_gate]`       | 18  | `[f₁, f₂, f₃, f₄]`| 4   |
//!
//! The trailing `1.0` of the stabilize layout pads the nine state entries to
//! ten. [`AttitudeEncoding::Quaternion`] replaces `[θ, 1.0]` by the
//! quaternion `[w, x, y, z]` placed between `p` and `v`, keeping dim 10.

use alloc::vec;
use alloc::vec::Vec;

use libm::round;
use nalgebra::{UnitQuaternion, Vector3};
use rand::Rng;

use crate::control::Command;
use crate::error::{Error, Result};
use crate::params::QuadParams;
use crate::state::QuadState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    Stabilize,
    MotorFailure,
    GateFlight,
}

impl core::str::FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stabilize" => Ok(TaskKind::Stabilize),
            "motor_failure" => Ok(TaskKind::MotorFailure),
            "gate" => Ok(TaskKind::GateFlight),
            other => Err(Error::arg(alloc::format!(
                "unknown task `{other}` (expected stabilize, motor_failure or gate)"
            ))),
        }
    }
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Stabilize => "stabilize",
            TaskKind::MotorFailure => "motor_failure",
            TaskKind::GateFlight => "gate",
        }
    }

    pub fn obs_dim(self) -> usize {
        match self {
            TaskKind::Stabilize => 10,
            TaskKind::MotorFailure => 12,
            TaskKind::GateFlight => 18,
        }
    }

    pub fn action_dim(self) -> usize {
        match self {
            TaskKind::Stabilize => 4,
            TaskKind::MotorFailure => 3,
            TaskKind::GateFlight => 4,
        }
    }
}

/// Attitude block of the stabilize observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AttitudeEncoding {
    #[default]
    EulerPadded,
    Quaternion,
}

/// Goal state. Euler angles are roll, pitch, yaw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    pub position: Vector3<f64>,
    pub euler: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub body_rates: Vector3<f64>,
}

impl Target {
    pub fn hover_at(position: Vector3<f64>) -> Self {
        Self {
            position,
            euler: Vector3::zeros(),
            velocity: Vector3::zeros(),
            body_rates: Vector3::zeros(),
        }
    }
}

/// Circular gate. Its normal is the gate-frame x axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gate {
    pub position: Vector3<f64>,
    pub euler: Vector3<f64>,
    pub radius: f64,
    /// Plane crossings with `radius < ρ ≤ radius + hit_margin` count as hits;
    /// farther crossings terminate as out of bounds.
    pub hit_margin: f64,
}

impl Gate {
    pub fn normal(&self) -> Vector3<f64> {
        UnitQuaternion::from_euler_angles(self.euler.x, self.euler.y, self.euler.z)
            * Vector3::x()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardWeights {
    pub position: f64,
    pub attitude: f64,
    pub velocity: f64,
    pub body_rates: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            position: 2e-3,
            attitude: 2e-3,
            velocity: 2e-4,
            body_rates: 2e-4,
        }
    }
}

/// Uniform box of initial states around `center`.
///
/// Attitude half-widths are roll/pitch/yaw in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitSampler {
    pub center: Vector3<f64>,
    pub position_half: Vector3<f64>,
    pub attitude_half: Vector3<f64>,
    pub velocity_half: Vector3<f64>,
    pub body_rate_half: Vector3<f64>,
}

impl InitSampler {
    /// Zero-width sampler: every draw is a hover state at `center`.
    pub fn fixed(center: Vector3<f64>) -> Self {
        Self {
            center,
            position_half: Vector3::zeros(),
            attitude_half: Vector3::zeros(),
            velocity_half: Vector3::zeros(),
            body_rate_half: Vector3::zeros(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.center.iter().all(|v| v.is_finite()) {
            return Err(Error::arg("sampler center must be finite"));
        }
        let halves = self
            .position_half
            .iter()
            .chain(self.attitude_half.iter())
            .chain(self.velocity_half.iter())
            .chain(self.body_rate_half.iter());
        for h in halves {
            if !(h.is_finite() && *h >= 0.0) {
                return Err(Error::arg("sampler half-widths must be finite and >= 0"));
            }
        }
        Ok(())
    }

    /// Draws a state with every rotor at hover thrust (zero for `failed_rotor`).
    pub fn sample<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        params: &QuadParams,
        failed_rotor: Option<usize>,
    ) -> QuadState {
        let mut draw3 = |half: &Vector3<f64>| {
            Vector3::new(
                uniform(rng, half.x),
                uniform(rng, half.y),
                uniform(rng, half.z),
            )
        };
        let position = self.center + draw3(&self.position_half);
        let euler = draw3(&self.attitude_half);
        let velocity = draw3(&self.velocity_half);
        let body_rates = draw3(&self.body_rate_half);
        let mut state = QuadState::hover(position, params);
        state.orientation = *UnitQuaternion::from_euler_angles(euler.x, euler.y, euler.z).quaternion();
        state.velocity = velocity;
        state.body_rates = body_rates;
        if let Some(i) = failed_rotor {
            state.thrusts[i] = 0.0;
        }
        state
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, half: f64) -> f64 {
    if half == 0.0 {
        0.0
    } else {
        rng.random_range(-half..=half)
    }
}

/// Complete description of one task instance.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    pub kind: TaskKind,
    pub target: Target,
    /// Seconds.
    pub episode_length: f64,
    /// Seconds.
    pub dt: f64,
    pub weights: RewardWeights,
    /// Used by [`TaskKind::GateFlight`] only.
    pub gate: Gate,
    /// Rotor forced to zero thrust in [`TaskKind::MotorFailure`].
    pub failed_rotor: usize,
    pub attitude_encoding: AttitudeEncoding,
    /// Terminate when `z <= ground_z`.
    pub ground_z: Option<f64>,
    /// Terminate when the position leaves this box `(min, max)`.
    pub world_bounds: Option<(Vector3<f64>, Vector3<f64>)>,
    /// Symmetric limit on commanded body rates, rad/s (stabilize actions).
    pub body_rate_limit: f64,
    pub sampler: InitSampler,
}

const DEG: f64 = core::f64::consts::PI / 180.0;

impl TaskSpec {
    pub fn stabilize() -> Self {
        let target = Vector3::new(0.0, 0.0, 5.0);
        Self {
            kind: TaskKind::Stabilize,
            target: Target::hover_at(target),
            episode_length: 5.0,
            dt: 0.02,
            weights: RewardWeights::default(),
            gate: Gate {
                position: Vector3::new(5.0, 0.0, 2.5),
                euler: Vector3::zeros(),
                radius: 1.0,
                hit_margin: 3.0,
            },
            failed_rotor: 3,
            attitude_encoding: AttitudeEncoding::EulerPadded,
            ground_z: None,
            world_bounds: None,
            body_rate_limit: 6.0,
            sampler: InitSampler {
                center: target,
                position_half: Vector3::repeat(3.0),
                attitude_half: Vector3::repeat(30.0 * DEG),
                velocity_half: Vector3::repeat(1.0),
                body_rate_half: Vector3::zeros(),
            },
        }
    }

    pub fn motor_failure() -> Self {
        Self {
            kind: TaskKind::MotorFailure,
            ..Self::stabilize()
        }
    }

    pub fn gate_flight() -> Self {
        let base = Self::stabilize();
        let gate = base.gate;
        Self {
            kind: TaskKind::GateFlight,
            target: Target::hover_at(gate.position + Vector3::new(3.0, 0.0, 0.0)),
            ground_z: Some(0.0),
            sampler: InitSampler {
                center: gate.position - Vector3::new(4.0, 0.0, 0.0),
                position_half: Vector3::repeat(1.0),
                attitude_half: Vector3::zeros(),
                velocity_half: Vector3::repeat(1.0),
                body_rate_half: Vector3::zeros(),
            },
            ..base
        }
    }

    pub fn for_kind(kind: TaskKind) -> Self {
        match kind {
            TaskKind::Stabilize => Self::stabilize(),
            TaskKind::MotorFailure => Self::motor_failure(),
            TaskKind::GateFlight => Self::gate_flight(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.episode_length.is_finite() && self.episode_length > 0.0) {
            return Err(Error::param("episode_length", "must be > 0"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::param("dt", "must be > 0"));
        }
        let w = &self.weights;
        for (name, v) in [
            ("reward_c1", w.position),
            ("reward_c2", w.attitude),
            ("reward_c3", w.velocity),
            ("reward_c4", w.body_rates),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::param(name, "weights must be >= 0"));
            }
        }
        if self.kind == TaskKind::GateFlight {
            if !(self.gate.radius.is_finite() && self.gate.radius > 0.0) {
                return Err(Error::param("gate_radius", "must be > 0"));
            }
            if !(self.gate.hit_margin.is_finite() && self.gate.hit_margin >= 0.0) {
                return Err(Error::param("gate_hit_margin", "must be >= 0"));
            }
        }
        if self.failed_rotor > 3 {
            return Err(Error::param("failed_rotor", "must be in 0..=3"));
        }
        if !(self.body_rate_limit.is_finite() && self.body_rate_limit > 0.0) {
            return Err(Error::param("body_rate_limit", "must be > 0"));
        }
        self.sampler.validate()
    }

    pub fn obs_dim(&self) -> usize {
        self.kind.obs_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.kind.action_dim()
    }

    /// Number of steps in a full episode, `round(episode_length / dt)`.
    pub fn episode_steps(&self) -> u64 {
        round(self.episode_length / self.dt) as u64
    }

    pub fn failed_rotor(&self) -> Option<usize> {
        (self.kind == TaskKind::MotorFailure).then_some(self.failed_rotor)
    }

    /// Maps a task action vector onto a vehicle command.
    pub fn command_from_action(&self, action: &[f64]) -> Result<Command> {
        if action.len() != self.action_dim() {
            return Err(Error::arg(alloc::format!(
                "{} expects {} action values, got {}",
                self.kind.name(),
                self.action_dim(),
                action.len()
            )));
        }
        let cmd = match self.kind {
            TaskKind::Stabilize => Command::BodyRate {
                thrust: action[0].max(0.0),
                body_rates: Vector3::new(action[1], action[2], action[3])
                    .map(|w| w.clamp(-self.body_rate_limit, self.body_rate_limit)),
            },
            TaskKind::MotorFailure => {
                let mut f = [0.0; 4];
                let mut src = action.iter();
                for (i, slot) in f.iter_mut().enumerate() {
                    if i != self.failed_rotor {
                        *slot = *src.next().unwrap();
                    }
                }
                Command::RotorThrusts(f)
            }
            TaskKind::GateFlight => Command::RotorThrusts([action[0], action[1], action[2], action[3]]),
        };
        cmd.validate()?;
        Ok(cmd)
    }

    /// Per-dimension `(low, high)` action limits.
    pub fn action_bounds(&self, params: &QuadParams) -> (Vec<f64>, Vec<f64>) {
        match self.kind {
            TaskKind::Stabilize => {
                let w = self.body_rate_limit;
                (
                    vec![0.0, -w, -w, -w],
                    vec![4.0 * params.thrust_max / params.mass, w, w, w],
                )
            }
            _ => (
                vec![params.thrust_min; self.action_dim()],
                vec![params.thrust_max; self.action_dim()],
            ),
        }
    }

    /// Observation vector.
    pub fn observe(&self, state: &QuadState) -> Vec<f64> {
        let mut out = vec![0.0; self.obs_dim()];
        self.observe_into(state, &mut out);
        out
    }

    /// Writes the observation into `out`, which must hold [`obs_dim`](Self::obs_dim) values.
    pub fn observe_into(&self, state: &QuadState, out: &mut [f64]) {
        assert_eq!(out.len(), self.obs_dim(), "observation buffer length");
        let euler = state.euler_angles();
        out[0..3].copy_from_slice(state.position.as_slice());
        match (self.kind, self.attitude_encoding) {
            (TaskKind::Stabilize, AttitudeEncoding::Quaternion) => {
                let q = state.attitude();
                out[3..7].copy_from_slice(&[q.w, q.i, q.j, q.k]);
                out[7..10].copy_from_slice(state.velocity.as_slice());
                return;
            }
            _ => {
                out[3..6].copy_from_slice(euler.as_slice());
                out[6..9].copy_from_slice(state.velocity.as_slice());
            }
        }
        match self.kind {
            TaskKind::Stabilize => out[9] = 1.0,
            TaskKind::MotorFailure => out[9..12].copy_from_slice(state.body_rates.as_slice()),
            TaskKind::GateFlight => {
                out[9..12].copy_from_slice(state.body_rates.as_slice());
                out[12..15].copy_from_slice(self.gate.position.as_slice());
                out[15..18].copy_from_slice(self.gate.euler.as_slice());
            }
        }
    }

    /// `−(c₁‖p − p*‖ + c₂‖θ − θ*‖ + c₃‖v − v*‖)`
    pub fn reward_stabilize(&self, state: &QuadState) -> f64 {
        let t = &self.target;
        let w = &self.weights;
        -(w.position * (state.position - t.position).norm()
            + w.attitude * (state.euler_angles() - t.euler).norm()
            + w.velocity * (state.velocity - t.velocity).norm())
    }

    /// Like [`reward_stabilize`](Self::reward_stabilize) with a body-rate
    /// term; yaw angle and yaw rate carry zero weight.
    pub fn reward_motor_failure(&self, state: &QuadState) -> f64 {
        self.reward_motor_failure_euler(&EulerState::from(state))
    }

    /// Motor-failure reward on an Euler-angle state.
    pub fn reward_motor_failure_euler(&self, state: &EulerState) -> f64 {
        let t = &self.target;
        let w = &self.weights;
        let att_xy = hypot2(state.euler.x - t.euler.x, state.euler.y - t.euler.y);
        let rate_xy = hypot2(
            state.body_rates.x - t.body_rates.x,
            state.body_rates.y - t.body_rates.y,
        );
        -(w.position * (state.position - t.position).norm()
            + w.attitude * att_xy
            + w.velocity * (state.velocity - t.velocity).norm()
            + w.body_rates * rate_xy)
    }

    /// `r_goal + 0.1` unless the gate or the ground was hit, else `−0.1`.
    pub fn reward_gate(&self, state: &QuadState, flags: &Termination) -> f64 {
        if flags.gate_hit || flags.ground_hit {
            -0.1
        } else {
            self.reward_stabilize(state) + 0.1
        }
    }

    pub fn reward(&self, state: &QuadState, flags: &Termination) -> f64 {
        match self.kind {
            TaskKind::Stabilize => self.reward_stabilize(state),
            TaskKind::MotorFailure => self.reward_motor_failure(state),
            TaskKind::GateFlight => self.reward_gate(state, flags),
        }
    }

    /// Evaluates every termination condition after a step from `prev` to
    /// `state` at episode time `t`.
    ///
    /// Timeout fires once `t` is within half a step of `episode_length`, so
    /// accumulated rounding in `t` cannot add or drop a step.
    pub fn check_termination(&self, state: &QuadState, prev: &QuadState, t: f64) -> Termination {
        let mut flags = Termination {
            timeout: t >= self.episode_length - 0.5 * self.dt,
            ..Termination::default()
        };
        if self.kind == TaskKind::GateFlight {
            if let Some(rho) = gate_crossing(&prev.position, &state.position, &self.gate) {
                match classify_crossing(rho, &self.gate) {
                    Crossing::Pass => flags.gate_pass = true,
                    Crossing::Hit => flags.gate_hit = true,
                    Crossing::Outside => flags.out_of_bounds = true,
                }
            }
        }
        if let Some(z) = self.ground_z {
            flags.ground_hit = state.position.z <= z;
        }
        if let Some((lo, hi)) = &self.world_bounds {
            let p = &state.position;
            if (0..3).any(|i| p[i] < lo[i] || p[i] > hi[i]) {
                flags.out_of_bounds = true;
            }
        }
        flags
    }
}

fn hypot2(a: f64, b: f64) -> f64 {
    libm::sqrt(a * a + b * b)
}

/// Kinematic state with attitude as roll, pitch and yaw, the form the
/// rewards are defined on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerState {
    pub position: Vector3<f64>,
    pub euler: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub body_rates: Vector3<f64>,
}

impl From<&QuadState> for EulerState {
    fn from(s: &QuadState) -> Self {
        Self {
            position: s.position,
            euler: s.euler_angles(),
            velocity: s.velocity,
            body_rates: s.body_rates,
        }
    }
}

/// Termination flags of one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Termination {
    pub timeout: bool,
    /// Crossed the gate plane inside the gate. Does not end the episode.
    pub gate_pass: bool,
    pub gate_hit: bool,
    pub ground_hit: bool,
    pub out_of_bounds: bool,
}

impl Termination {
    pub fn done(&self) -> bool {
        self.timeout || self.gate_hit || self.ground_hit || self.out_of_bounds
    }

    /// The most specific reason the episode ended.
    pub fn reason(&self) -> Option<&'static str> {
        if self.gate_hit {
            Some("gate_hit")
        } else if self.ground_hit {
            Some("ground_hit")
        } else if self.out_of_bounds {
            Some("bounds")
        } else if self.timeout {
            Some("timeout")
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Crossing {
    Pass,
    Hit,
    Outside,
}

pub fn classify_crossing(rho: f64, gate: &Gate) -> Crossing {
    if rho <= gate.radius {
        Crossing::Pass
    } else if rho <= gate.radius + gate.hit_margin {
        Crossing::Hit
    } else {
        Crossing::Outside
    }
}

/// Radial distance from the gate center at which the segment `from → to`
/// crosses the gate plane, if it does.
///
/// A crossing requires the signed plane distance to go from strictly
/// negative to non-negative, or from strictly positive to non-positive, so a
/// segment ending on the plane counts once and the next one does not.
pub fn gate_crossing(from: &Vector3<f64>, to: &Vector3<f64>, gate: &Gate) -> Option<f64> {
    let n = gate.normal();
    let d0 = n.dot(&(from - gate.position));
    let d1 = n.dot(&(to - gate.position));
    let crosses = (d0 < 0.0 && d1 >= 0.0) || (d0 > 0.0 && d1 <= 0.0);
    if !crosses {
        return None;
    }
    let s = d0 / (d0 - d1);
    let hit = from + (to - from) * s;
    let offset = hit - gate.position;
    let lateral = offset - n * n.dot(&offset);
    Some(lateral.norm())
}
