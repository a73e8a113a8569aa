//! Host-side companion to `flightcore`: configuration files, binary PLY
//! export/import, the multi-threaded vectorized environment, the throughput
//! benchmark and the TCP bridge used by external renderers.

pub mod bench;
pub mod bridge;
pub mod config;
mod error;
pub mod planning;
pub mod ply;
pub mod runner;
pub mod vecenv;

pub use error::SimError;
pub use vecenv::{BatchResult, ParamsSource, VecSim, VecSimConfig};
