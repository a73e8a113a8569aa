//! Quadrotor simulation core.
//!
//! Everything in this crate is allocation-light, deterministic and free of
//! I/O so that it can be used from `no_std` targets as well as from the
//! vectorized, multi-threaded simulator in `flightcore-sim`.
//!
//! * [`dynamics`]: rigid-body model with rotor drag, thrust mixing and
//!   first-order motor lag, integrated with explicit Euler or RK4.
//! * [`control`]: body-rate tracking controller (body-rate command mode).
//! * [`sensing`]: IMU model with optional white noise and constant bias.
//! * [`tasks`]: the stabilization, motor-failure and gate-flight RL tasks.
//! * [`world`]: occupancy point clouds, collision queries and an RRT planner.
//! * [`policy`]: scripted controllers used for smoke tests and demos.
#![no_std]

extern crate alloc;

pub mod control;
pub mod dynamics;
mod error;
pub mod params;
pub mod policy;
pub mod rng;
pub mod sensing;
pub mod state;
pub mod tasks;
pub mod world;

pub use control::{bodyrate_to_thrusts, Command, RateGains};
pub use dynamics::{Dynamics, Integrator, QuadModel};
pub use error::{Error, Result};
pub use params::QuadParams;
pub use sensing::{imu_measure, ImuNoiseModel, ImuReading};
pub use state::{QuadState, StateDerivative};

pub use nalgebra::{Quaternion, UnitQuaternion, Vector3};

/// Gravity magnitude, m/s².
pub const GRAVITY: f64 = 9.81;
