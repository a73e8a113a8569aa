//! TCP bridge to external renderers and loggers.
//!
//! The server pushes a `StateUpdate` after every simulation step and answers
//! `Configure` and `PointCloudRequest` messages. See [`protocol`] for the
//! frame layout.

pub mod client;
pub mod protocol;
pub mod server;

use std::sync::{Arc, Mutex, MutexGuard};

use flightcore::world::{generate_forest, Aabb, OccupancyCloud};
use flightcore::{Command, QuadState};

pub use client::{BridgeClient, ChunkAssembler, ClientError};
pub use protocol::{ConfigureRequest, Envelope, FrameDecoder, FrameError, Message, Pose};
pub use server::{BridgeBackend, BridgeServer, BridgeStats};

use crate::error::SimError;
use crate::vecenv::{ParamsSource, VecSim, VecSimConfig};

/// Environment variable naming the bridge endpoint.
pub const BRIDGE_ENV: &str = "FLIGHTCORE_BRIDGE";

/// Largest occupancy grid a point-cloud request may cover.
pub const MAX_REQUEST_CELLS: u64 = 400_000_000;

pub fn poses(states: &[QuadState]) -> Vec<Pose> {
    states
        .iter()
        .enumerate()
        .map(|(i, s)| Pose {
            env_id: i as u32,
            position: s.position,
            orientation: s.orientation,
        })
        .collect()
}

/// Forest settings used to answer point-cloud requests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestSource {
    pub density: f64,
    pub seed: u64,
}

/// Backend driving a [`VecSim`] shared with the simulation loop.
///
/// `Configure` rebuilds the simulation with the requested batch size and
/// step while holding the simulation lock, and
/// [`step_and_publish`](Self::step_and_publish) publishes under the same
/// lock, so every update after the Ack reflects the new configuration.
pub struct SimBackend {
    sim: Mutex<VecSim>,
    forest: ForestSource,
}

impl SimBackend {
    pub fn new(sim: VecSim, forest: ForestSource) -> Arc<Self> {
        Arc::new(Self {
            sim: Mutex::new(sim),
            forest,
        })
    }

    pub fn sim(&self) -> MutexGuard<'_, VecSim> {
        self.sim.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Digest a Configure request must quote.
    pub fn params_digest(&self) -> Option<u64> {
        match &self.sim().config().params {
            ParamsSource::Shared(p) => Some(p.digest()),
            ParamsSource::PerEnv(_) => None,
        }
    }

    /// Steps with the commands from `commands` and publishes the new states.
    /// Returns the number of environments stepped.
    pub fn step_and_publish(
        &self,
        server: &BridgeServer,
        mut commands: impl FnMut(&VecSim) -> Vec<Command>,
    ) -> Result<usize, SimError> {
        let mut sim = self.sim();
        let cmds = commands(&sim);
        let r = sim.step(&cmds)?;
        let time = r.states.first().map_or(0.0, |s| s.time);
        server.publish(time, poses(&r.states));
        Ok(cmds.len())
    }
}

impl BridgeBackend for SimBackend {
    fn configure(&self, request: &ConfigureRequest) -> Result<(), String> {
        let mut sim = self.sim();
        let config = sim.config().clone();
        let digest = match &config.params {
            ParamsSource::Shared(p) => p.digest(),
            ParamsSource::PerEnv(_) => return Err("per-env parameters cannot be reconfigured".into()),
        };
        if digest != request.params_digest {
            return Err(format!(
                "params digest mismatch: server has {digest:016x}, request has {:016x}",
                request.params_digest
            ));
        }
        let mut task = config.task.clone();
        if let Some(t) = &mut task {
            t.dt = request.dt;
        }
        let mut next = VecSim::new(VecSimConfig {
            n_envs: request.n_envs,
            dt: request.dt,
            task,
            ..config
        })
        .map_err(|e| e.to_string())?;
        next.reset().map_err(|e| e.to_string())?;
        *sim = next;
        Ok(())
    }

    fn point_cloud(&self, bounds: &Aabb, resolution: f64) -> Result<OccupancyCloud, String> {
        let cells = bounds.cell_count(resolution).map_err(|e| e.to_string())?;
        if cells > MAX_REQUEST_CELLS {
            return Err(format!("request covers {cells} cells, limit is {MAX_REQUEST_CELLS}"));
        }
        generate_forest(*bounds, resolution, self.forest.density, self.forest.seed).map_err(|e| e.to_string())
    }
}
