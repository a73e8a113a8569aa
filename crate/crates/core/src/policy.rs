//! Scripted controllers that produce task actions.

use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3};
use rand::Rng;

use crate::control::{bodyrate_to_thrusts, RateGains};
use crate::dynamics::QuadModel;
use crate::error::{Error, Result};
use crate::state::QuadState;
use crate::tasks::{TaskKind, TaskSpec};

pub trait Policy {
    /// Writes an action of length `spec.action_dim()` into `out`.
    fn act(&mut self, state: &QuadState, spec: &TaskSpec, model: &QuadModel, out: &mut [f64]) -> Result<()>;
}

/// Position/attitude cascade that flies to the task target and hovers there.
///
/// The outer loop turns position and velocity errors into a desired
/// acceleration, whose direction fixes the desired thrust axis; the attitude
/// error is turned into body-rate commands. Thrust-mode tasks run the result
/// through the body-rate controller.
#[derive(Debug, Clone, Copy)]
pub struct HoverController {
    pub kp_position: f64,
    pub kd_velocity: f64,
    pub k_attitude: f64,
    pub k_yaw: f64,
    /// Largest commanded tilt, rad.
    pub max_tilt: f64,
    pub gains: RateGains,
}

impl Default for HoverController {
    fn default() -> Self {
        Self {
            kp_position: 1.5,
            kd_velocity: 2.0,
            k_attitude: 6.0,
            k_yaw: 2.0,
            max_tilt: 0.6,
            gains: RateGains::default(),
        }
    }
}

impl HoverController {
    /// Mass-normalized thrust and body rates steering towards `spec.target`.
    pub fn body_rate_command(&self, state: &QuadState, spec: &TaskSpec, gravity: f64) -> (f64, Vector3<f64>) {
        let t = &spec.target;
        let mut acc = (t.position - state.position) * self.kp_position
            + (t.velocity - state.velocity) * self.kd_velocity;
        acc.z += gravity;
        acc.z = acc.z.max(0.2 * gravity);
        let lateral = libm::hypot(acc.x, acc.y);
        let max_lateral = acc.z * libm::tan(self.max_tilt);
        if lateral > max_lateral {
            let k = max_lateral / lateral;
            acc.x *= k;
            acc.y *= k;
        }

        let att = state.attitude();
        let z_body = att * Vector3::z();
        let thrust = acc.dot(&z_body).max(0.0);

        let z_des = acc.normalize();
        let yaw = t.euler.z;
        let heading = Vector3::new(libm::cos(yaw), libm::sin(yaw), 0.0);
        let y_des = z_des.cross(&heading).normalize();
        let x_des = y_des.cross(&z_des);
        let rot = Rotation3::from_matrix_unchecked(Matrix3::from_columns(&[x_des, y_des, z_des]));
        let desired = UnitQuaternion::from_rotation_matrix(&rot);

        let err = att.inverse() * desired;
        let sign = if err.w < 0.0 { -1.0 } else { 1.0 };
        let v = err.vector() * (2.0 * sign);
        let rates = Vector3::new(v.x * self.k_attitude, v.y * self.k_attitude, v.z * self.k_yaw);
        (thrust, rates)
    }
}

impl Policy for HoverController {
    fn act(&mut self, state: &QuadState, spec: &TaskSpec, model: &QuadModel, out: &mut [f64]) -> Result<()> {
        check_len(spec, out)?;
        let (c, w) = self.body_rate_command(state, spec, model.params().gravity);
        match spec.kind {
            TaskKind::Stabilize => {
                out[0] = c;
                out[1..4].copy_from_slice(w.as_slice());
            }
            TaskKind::GateFlight => {
                let f = bodyrate_to_thrusts(c, &w, state, model, &self.gains)?;
                out.copy_from_slice(&f);
            }
            TaskKind::MotorFailure => {
                let f = bodyrate_to_thrusts(c, &w, state, model, &self.gains)?;
                let mut dst = out.iter_mut();
                for (i, v) in f.iter().enumerate() {
                    if i != spec.failed_rotor {
                        *dst.next().unwrap() = *v;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Uniformly random actions within the task's action bounds.
#[derive(Debug, Clone)]
pub struct RandomPolicy<R> {
    rng: R,
}

impl<R: Rng> RandomPolicy<R> {
    pub fn new(rng: R) -> Self {
        Self { rng }
    }
}

impl<R: Rng> Policy for RandomPolicy<R> {
    fn act(&mut self, _state: &QuadState, spec: &TaskSpec, model: &QuadModel, out: &mut [f64]) -> Result<()> {
        check_len(spec, out)?;
        let (lo, hi) = spec.action_bounds(model.params());
        for ((o, l), h) in out.iter_mut().zip(lo).zip(hi) {
            *o = self.rng.random_range(l..=h);
        }
        Ok(())
    }
}

fn check_len(spec: &TaskSpec, out: &[f64]) -> Result<()> {
    if out.len() == spec.action_dim() {
        Ok(())
    } else {
        Err(Error::arg("action buffer has the wrong length"))
    }
}
