//! Simulated vehicle state and its time derivative.

use core::ops::{Add, Mul};

use nalgebra::{Quaternion, UnitQuaternion, Vector3};

use crate::error::{Error, Result};
use crate::params::QuadParams;

/// Full simulated state of one quadrotor.
///
/// `orientation` maps body-frame vectors into the world frame (z up) and is
/// stored scalar-first as `[w, x, y, z]` by [`Quaternion::new`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadState {
    pub position: Vector3<f64>,
    pub orientation: Quaternion<f64>,
    pub velocity: Vector3<f64>,
    /// Body rates, rad/s, body frame.
    pub body_rates: Vector3<f64>,
    /// Rotor thrusts, N.
    pub thrusts: [f64; 4],
    /// Simulation time, s.
    pub time: f64,
}

impl Default for QuadState {
    fn default() -> Self {
        Self {
            position: Vector3::zeros(),
            orientation: Quaternion::identity(),
            velocity: Vector3::zeros(),
            body_rates: Vector3::zeros(),
            thrusts: [0.0; 4],
            time: 0.0,
        }
    }
}

impl QuadState {
    /// Level, motionless state with every rotor at hover thrust.
    pub fn hover(position: Vector3<f64>, params: &QuadParams) -> Self {
        let f = params.clamp_thrust(params.hover_thrust());
        Self {
            position,
            thrusts: [f; 4],
            ..Self::default()
        }
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().all(|v| v.is_finite())
            && self.orientation.coords.iter().all(|v| v.is_finite())
            && self.velocity.iter().all(|v| v.is_finite())
            && self.body_rates.iter().all(|v| v.is_finite())
            && self.thrusts.iter().all(|v| v.is_finite())
            && self.time.is_finite()
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidState("non-finite component".into()))
        }
    }

    pub fn attitude(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_quaternion(self.orientation)
    }

    /// Roll, pitch and yaw (ZYX convention) of the current attitude.
    pub fn euler_angles(&self) -> Vector3<f64> {
        let (roll, pitch, yaw) = self.attitude().euler_angles();
        Vector3::new(roll, pitch, yaw)
    }

    /// `self + h * d`, without renormalization or clamping.
    pub fn advanced(&self, d: &StateDerivative, h: f64) -> Self {
        let mut thrusts = self.thrusts;
        for (f, df) in thrusts.iter_mut().zip(d.thrusts) {
            *f += h * df;
        }
        Self {
            position: self.position + d.position * h,
            orientation: self.orientation + d.orientation * h,
            velocity: self.velocity + d.velocity * h,
            body_rates: self.body_rates + d.body_rates * h,
            thrusts,
            time: self.time + h,
        }
    }
}

/// Time derivative of a [`QuadState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDerivative {
    pub position: Vector3<f64>,
    pub orientation: Quaternion<f64>,
    pub velocity: Vector3<f64>,
    pub body_rates: Vector3<f64>,
    pub thrusts: [f64; 4],
}

impl StateDerivative {
    pub fn zero() -> Self {
        Self {
            position: Vector3::zeros(),
            orientation: Quaternion::new(0.0, 0.0, 0.0, 0.0),
            velocity: Vector3::zeros(),
            body_rates: Vector3::zeros(),
            thrusts: [0.0; 4],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().all(|v| v.is_finite())
            && self.orientation.coords.iter().all(|v| v.is_finite())
            && self.velocity.iter().all(|v| v.is_finite())
            && self.body_rates.iter().all(|v| v.is_finite())
            && self.thrusts.iter().all(|v| v.is_finite())
    }
}

impl Add for StateDerivative {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        let mut thrusts = self.thrusts;
        for (a, b) in thrusts.iter_mut().zip(rhs.thrusts) {
            *a += b;
        }
        Self {
            position: self.position + rhs.position,
            orientation: self.orientation + rhs.orientation,
            velocity: self.velocity + rhs.velocity,
            body_rates: self.body_rates + rhs.body_rates,
            thrusts,
        }
    }
}

impl Mul<f64> for StateDerivative {
    type Output = Self;

    fn mul(self, k: f64) -> Self {
        Self {
            position: self.position * k,
            orientation: self.orientation * k,
            velocity: self.velocity * k,
            body_rates: self.body_rates * k,
            thrusts: self.thrusts.map(|f| f * k),
        }
    }
}
