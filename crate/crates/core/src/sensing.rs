//! Inertial measurement unit model.

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::params::QuadParams;
use crate::state::{QuadState, StateDerivative};

/// One IMU sample in the body frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ImuReading {
    /// Specific force, m/s².
    pub accel: Vector3<f64>,
    /// Angular rate, rad/s.
    pub gyro: Vector3<f64>,
    pub time: f64,
}

/// White Gaussian noise per sample plus a constant bias.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ImuNoiseModel {
    pub accel_noise_std: f64,
    pub gyro_noise_std: f64,
    pub accel_bias: Vector3<f64>,
    pub gyro_bias: Vector3<f64>,
}

impl ImuNoiseModel {
    pub fn noise_free() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("imu_accel_std", self.accel_noise_std),
            ("imu_gyro_std", self.gyro_noise_std),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::param(name, "must be finite and >= 0"));
            }
        }
        if !self
            .accel_bias
            .iter()
            .chain(self.gyro_bias.iter())
            .all(|b| b.is_finite())
        {
            return Err(Error::param("imu_bias", "must be finite"));
        }
        Ok(())
    }
}

fn gaussian3<R: Rng + ?Sized>(rng: &mut R, std: f64) -> Vector3<f64> {
    if std == 0.0 {
        return Vector3::zeros();
    }
    Vector3::new(
        rng.sample::<f64, _>(StandardNormal) * std,
        rng.sample::<f64, _>(StandardNormal) * std,
        rng.sample::<f64, _>(StandardNormal) * std,
    )
}

/// Measures specific force `Rᵀ(v̇ + [0, 0, g])` and body rates.
///
/// No random numbers are drawn for a zero standard deviation.
pub fn imu_measure<R: Rng + ?Sized>(
    state: &QuadState,
    deriv: &StateDerivative,
    params: &QuadParams,
    noise: &ImuNoiseModel,
    rng: &mut R,
) -> ImuReading {
    let rot = state.attitude();
    let specific = deriv.velocity + Vector3::new(0.0, 0.0, params.gravity);
    let accel = rot.inverse_transform_vector(&specific)
        + noise.accel_bias
        + gaussian3(rng, noise.accel_noise_std);
    let gyro = state.body_rates + noise.gyro_bias + gaussian3(rng, noise.gyro_noise_std);
    ImuReading {
        accel,
        gyro,
        time: state.time,
    }
}
