//! Vehicle parameters.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::GRAVITY;

/// Physical parameters of a quadrotor.
///
/// Inertia and rotor drag are diagonal and stored as their diagonals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadParams {
    /// Mass, kg.
    pub mass: f64,
    /// Arm length, m.
    pub arm_length: f64,
    /// Diagonal of the inertia matrix, kg·m².
    pub inertia: Vector3<f64>,
    /// Diagonal of the rotor-drag matrix, 1/s.
    pub drag: Vector3<f64>,
    /// Rotor torque coefficient, m.
    pub kappa: f64,
    /// Motor time constant, s.
    pub motor_tau: f64,
    pub thrust_min: f64,
    pub thrust_max: f64,
    /// Gravity magnitude, m/s².
    pub gravity: f64,
}

impl Default for QuadParams {
    fn default() -> Self {
        Self {
            mass: 1.0,
            arm_length: 0.17,
            inertia: Vector3::new(0.0025, 0.0021, 0.0043),
            drag: Vector3::zeros(),
            kappa: 0.016,
            motor_tau: 0.033,
            thrust_min: 0.0,
            thrust_max: 8.0,
            gravity: GRAVITY,
        }
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, "must be finite and > 0"))
    }
}

fn non_negative(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, "must be finite and >= 0"))
    }
}

impl QuadParams {
    pub fn validate(&self) -> Result<()> {
        positive("mass", self.mass)?;
        positive("arm_length", self.arm_length)?;
        positive("motor_tau", self.motor_tau)?;
        positive("inertia_xx", self.inertia.x)?;
        positive("inertia_yy", self.inertia.y)?;
        positive("inertia_zz", self.inertia.z)?;
        non_negative("drag_x", self.drag.x)?;
        non_negative("drag_y", self.drag.y)?;
        non_negative("drag_z", self.drag.z)?;
        non_negative("thrust_min", self.thrust_min)?;
        positive("gravity", self.gravity)?;
        if !self.kappa.is_finite() {
            return Err(Error::param("kappa", "must be finite"));
        }
        if !(self.thrust_max.is_finite() && self.thrust_max > self.thrust_min) {
            return Err(Error::param("thrust_max", "must be finite and > thrust_min"));
        }
        Ok(())
    }

    /// Per-rotor thrust that holds the vehicle in hover, before clamping.
    pub fn hover_thrust(&self) -> f64 {
        self.mass * self.gravity / 4.0
    }

    pub fn clamp_thrust(&self, f: f64) -> f64 {
        f.clamp(self.thrust_min, self.thrust_max)
    }

    /// Stable 64-bit FNV-1a digest of every parameter's bit pattern.
    pub fn digest(&self) -> u64 {
        let fields = [
            self.mass,
            self.arm_length,
            self.inertia.x,
            self.inertia.y,
            self.inertia.z,
            self.drag.x,
            self.drag.y,
            self.drag.z,
            self.kappa,
            self.motor_tau,
            self.thrust_min,
            self.thrust_max,
            self.gravity,
        ];
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for v in fields {
            for b in v.to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }
}
