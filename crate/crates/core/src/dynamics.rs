//! Rigid-body quadrotor dynamics with linear rotor drag and first-order motors.
//!
//! The continuous model is
//!
//! ```text
//! ṗ = v
//! v̇ = R(q)·[0, 0, c] − [0, 0, g] − R D Rᵀ v
//! q̇ = ½ q ⊗ [0, ω]
//! ω̇ = J⁻¹ (η − ω × Jω)
//! ḟ = (f_des − f) / α
//! ```
//!
//! where `(c, η)` come from [`QuadModel::mix`]. Stepping renormalizes the
//! quaternion and clamps rotor thrusts at the end of every step; the ODE
//! itself is left unclamped so each step integrates a smooth system.

use core::f64::consts::SQRT_2;

use nalgebra::{Matrix3, Quaternion, Vector3};

use crate::error::{Error, Result};
use crate::params::QuadParams;
use crate::state::{QuadState, StateDerivative};

/// Fixed-step integration scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrator {
    Euler,
    #[default]
    Rk4,
}

impl core::str::FromStr for Integrator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euler" => Ok(Integrator::Euler),
            "rk4" => Ok(Integrator::Rk4),
            other => Err(Error::arg(alloc::format!("unknown integrator `{other}`"))),
        }
    }
}

impl core::fmt::Display for Integrator {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Integrator::Euler => "euler",
            Integrator::Rk4 => "rk4",
        })
    }
}

/// Interface shared by dynamics backends.
///
/// Only [`QuadModel`] is provided here; other backends (external physics
/// engines, hardware in the loop) can implement the same contract.
pub trait Dynamics {
    fn params(&self) -> &QuadParams;

    fn derivative(&self, state: &QuadState, thrust_cmd: &[f64; 4]) -> Result<StateDerivative>;

    fn step(
        &self,
        state: &QuadState,
        thrust_cmd: &[f64; 4],
        dt: f64,
        method: Integrator,
    ) -> Result<QuadState>;
}

/// Classical quadrotor model with validated parameters.
#[derive(Debug, Clone)]
pub struct QuadModel {
    params: QuadParams,
    inertia_inv: Vector3<f64>,
    /// `l / √2`
    arm_factor: f64,
}

impl QuadModel {
    pub fn new(params: QuadParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            inertia_inv: params.inertia.map(|j| 1.0 / j),
            arm_factor: params.arm_length / SQRT_2,
            params,
        })
    }

    pub fn params(&self) -> &QuadParams {
        &self.params
    }

    /// Converts rotor thrusts into mass-normalized collective thrust (m/s²)
    /// and body torques (N·m).
    pub fn mix(&self, f: &[f64; 4]) -> (f64, Vector3<f64>) {
        let k = self.arm_factor;
        let kappa = self.params.kappa;
        let eta = Vector3::new(
            k * (f[0] - f[1] - f[2] + f[3]),
            k * (-f[0] - f[1] + f[2] + f[3]),
            kappa * (f[0] - f[1] + f[2] - f[3]),
        );
        let c = (f[0] + f[1] + f[2] + f[3]) / self.params.mass;
        (c, eta)
    }

    /// Inverse of [`mix`](Self::mix). The result is not clamped.
    ///
    /// The four allocation columns are mutually orthogonal with squared norm
    /// 4, so the inverse is a scaled transpose.
    pub fn unmix(&self, c: f64, eta: &Vector3<f64>) -> Result<[f64; 4]> {
        if self.arm_factor == 0.0 {
            return Err(Error::SingularAllocation("arm_length is zero"));
        }
        if self.params.kappa == 0.0 {
            return Err(Error::SingularAllocation("kappa is zero"));
        }
        let total = c * self.params.mass;
        let x = eta.x / self.arm_factor;
        let y = eta.y / self.arm_factor;
        let z = eta.z / self.params.kappa;
        Ok([
            0.25 * (total + x - y + z),
            0.25 * (total - x - y - z),
            0.25 * (total - x + y + z),
            0.25 * (total + x + y - z),
        ])
    }

    /// Derivative without input validation, used for intermediate stages.
    fn derivative_unchecked(&self, s: &QuadState, thrust_cmd: &[f64; 4]) -> StateDerivative {
        let p = &self.params;
        let (c, eta) = self.mix(&s.thrusts);

        let norm = s.orientation.norm();
        let unit = s.orientation / norm;
        let rot = quat_to_matrix(&unit);

        let gravity = Vector3::new(0.0, 0.0, p.gravity);
        let body_vel = rot.transpose() * s.velocity;
        let drag = rot * body_vel.component_mul(&p.drag);
        let accel = rot.column(2) * c - gravity - drag;

        let w = &s.body_rates;
        let omega_q = Quaternion::new(0.0, w.x, w.y, w.z);
        let q_dot = (s.orientation * omega_q) * 0.5;

        let w_dot = (eta - gyroscopic(&p.inertia, w)).component_mul(&self.inertia_inv);

        let inv_tau = 1.0 / p.motor_tau;
        let mut f_dot = [0.0; 4];
        for i in 0..4 {
            f_dot[i] = (thrust_cmd[i] - s.thrusts[i]) * inv_tau;
        }

        StateDerivative {
            position: s.velocity,
            orientation: q_dot,
            velocity: accel,
            body_rates: w_dot,
            thrusts: f_dot,
        }
    }

    fn check_inputs(&self, state: &QuadState, thrust_cmd: &[f64; 4]) -> Result<()> {
        state.check_finite()?;
        if !thrust_cmd.iter().all(|f| f.is_finite()) {
            return Err(Error::arg("thrust command contains non-finite values"));
        }
        if state.orientation.norm() == 0.0 {
            return Err(Error::InvalidState("zero quaternion".into()));
        }
        Ok(())
    }
}

/// `ω × Jω` for diagonal `J`, written so that it vanishes exactly for
/// isotropic inertia.
pub(crate) fn gyroscopic(inertia: &Vector3<f64>, w: &Vector3<f64>) -> Vector3<f64> {
    Vector3::new(
        (inertia.z - inertia.y) * w.y * w.z,
        (inertia.x - inertia.z) * w.z * w.x,
        (inertia.y - inertia.x) * w.x * w.y,
    )
}

/// Rotation matrix of a unit quaternion (world ← body).
fn quat_to_matrix(q: &Quaternion<f64>) -> Matrix3<f64> {
    let (w, x, y, z) = (q.w, q.i, q.j, q.k);
    let (xx, yy, zz) = (x * x, y * y, z * z);
    let (xy, xz, yz) = (x * y, x * z, y * z);
    let (wx, wy, wz) = (w * x, w * y, w * z);
    Matrix3::new(
        1.0 - 2.0 * (yy + zz),
        2.0 * (xy - wz),
        2.0 * (xz + wy),
        2.0 * (xy + wz),
        1.0 - 2.0 * (xx + zz),
        2.0 * (yz - wx),
        2.0 * (xz - wy),
        2.0 * (yz + wx),
        1.0 - 2.0 * (xx + yy),
    )
}

impl Dynamics for QuadModel {
    fn params(&self) -> &QuadParams {
        &self.params
    }

    fn derivative(&self, state: &QuadState, thrust_cmd: &[f64; 4]) -> Result<StateDerivative> {
        self.check_inputs(state, thrust_cmd)?;
        let d = self.derivative_unchecked(state, thrust_cmd);
        if d.is_finite() {
            Ok(d)
        } else {
            Err(Error::InvalidState("derivative overflowed".into()))
        }
    }

    fn step(
        &self,
        state: &QuadState,
        thrust_cmd: &[f64; 4],
        dt: f64,
        method: Integrator,
    ) -> Result<QuadState> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::arg("dt must be finite and > 0"));
        }
        self.check_inputs(state, thrust_cmd)?;
        if (state.orientation.norm() - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidState("quaternion is not unit norm".into()));
        }
        let cmd = thrust_cmd.map(|f| self.params.clamp_thrust(f));

        let mut next = match method {
            Integrator::Euler => {
                let k1 = self.derivative_unchecked(state, &cmd);
                state.advanced(&k1, dt)
            }
            Integrator::Rk4 => {
                let half = 0.5 * dt;
                let k1 = self.derivative_unchecked(state, &cmd);
                let k2 = self.derivative_unchecked(&state.advanced(&k1, half), &cmd);
                let k3 = self.derivative_unchecked(&state.advanced(&k2, half), &cmd);
                let k4 = self.derivative_unchecked(&state.advanced(&k3, dt), &cmd);
                let k = (k1 + (k2 + k3) * 2.0 + k4) * (1.0 / 6.0);
                state.advanced(&k, dt)
            }
        };

        next.orientation /= next.orientation.norm();
        for f in next.thrusts.iter_mut() {
            *f = self.params.clamp_thrust(*f);
        }
        next.time = state.time + dt;

        if next.is_finite() {
            Ok(next)
        } else {
            Err(Error::InvalidState("integration produced non-finite values".into()))
        }
    }
}
