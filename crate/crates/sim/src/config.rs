//! Plain-text `key = value` configuration shared by every subsystem.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown keys are
//! rejected so typos do not silently fall back to defaults.
//!
//! ```text
//! # vehicle
//! mass = 0.75
//! inertia_zz = 0.004
//! task = gate
//! ```

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use flightcore::tasks::{AttitudeEncoding, TaskKind, TaskSpec};
use flightcore::world::Aabb;
use flightcore::{ImuNoiseModel, Integrator, QuadParams, RateGains, Vector3};

use crate::error::SimError;

/// Every key understood by [`Settings::from_config`].
pub const KNOWN_KEYS: &[&str] = &[
    // vehicle
    "mass", "arm_length", "inertia_xx", "inertia_yy", "inertia_zz", "drag_x", "drag_y", "drag_z",
    "kappa", "motor_tau", "thrust_min", "thrust_max",
    // body-rate controller
    "rate_kp_x", "rate_kp_y", "rate_kp_z",
    // imu
    "imu_accel_std", "imu_gyro_std", "imu_accel_bias_x", "imu_accel_bias_y", "imu_accel_bias_z",
    "imu_gyro_bias_x", "imu_gyro_bias_y", "imu_gyro_bias_z",
    // simulation
    "n_envs", "n_workers", "dt", "method", "seed",
    // task
    "task", "episode_length", "reward_c1", "reward_c2", "reward_c3", "reward_c4",
    "target_x", "target_y", "target_z", "target_roll", "target_pitch", "target_yaw",
    "gate_x", "gate_y", "gate_z", "gate_roll", "gate_pitch", "gate_yaw", "gate_radius",
    "gate_hit_margin", "failed_rotor", "attitude_encoding", "ground_z", "body_rate_limit",
    // initial-state sampler
    "init_x", "init_y", "init_z", "init_pos_range", "init_att_range_deg", "init_vel_range",
    "init_rate_range",
    // world
    "world_min_x", "world_min_y", "world_min_z", "world_max_x", "world_max_y", "world_max_z",
    "resolution", "density",
];

/// Parsed key/value pairs with their line numbers.
#[derive(Debug, Clone, Default)]
pub struct KvConfig {
    entries: BTreeMap<String, (String, usize)>,
}

impl KvConfig {
    pub fn parse(text: &str) -> Result<Self, SimError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let Some((k, v)) = content.split_once('=') else {
                return Err(SimError::Config {
                    line,
                    reason: format!("expected `key = value`, got `{content}`"),
                });
            };
            let (k, v) = (k.trim(), v.trim());
            if !KNOWN_KEYS.contains(&k) {
                return Err(SimError::Config {
                    line,
                    reason: format!("unknown key `{k}`"),
                });
            }
            if entries.insert(k.to_string(), (v.to_string(), line)).is_some() {
                return Err(SimError::Config {
                    line,
                    reason: format!("duplicate key `{k}`"),
                });
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        Self::parse(&text)
    }

    /// Sets `key` as if it appeared in the file, replacing any file value.
    /// Used for command-line flags, which take precedence.
    pub fn set_override(&mut self, key: &str, value: impl Into<String>) -> Result<(), SimError> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(SimError::Argument(format!("unknown key `{key}`")));
        }
        self.entries.insert(key.to_string(), (value.into(), 0));
        Ok(())
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, SimError>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((v, line)) => v.parse().map(Some).map_err(|e| SimError::Config {
                line: *line,
                reason: format!("`{key}`: {e}"),
            }),
        }
    }

    fn set_f64(&self, key: &str, slot: &mut f64) -> Result<(), SimError> {
        if let Some(v) = self.get::<f64>(key)? {
            *slot = v;
        }
        Ok(())
    }

    fn set_vec3(&self, keys: [&str; 3], slot: &mut Vector3<f64>) -> Result<(), SimError> {
        for (i, k) in keys.iter().enumerate() {
            self.set_f64(k, &mut slot[i])?;
        }
        Ok(())
    }
}

/// Simulation-loop settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub n_envs: usize,
    pub n_workers: usize,
    pub dt: f64,
    pub method: Integrator,
    pub seed: u64,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            n_envs: 1,
            n_workers: 1,
            dt: 0.02,
            method: Integrator::Rk4,
            seed: 0,
        }
    }
}

/// Synthetic world used by the `world`, `plan` and `serve` subcommands.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldSettings {
    pub bounds: Aabb,
    pub resolution: f64,
    pub density: f64,
}

impl Default for WorldSettings {
    fn default() -> Self {
        Self {
            bounds: Aabb::new(Vector3::zeros(), Vector3::new(50.0, 50.0, 10.0)),
            resolution: 0.1,
            density: 0.2,
        }
    }
}

/// Everything a configuration file can set, with defaults for absent keys.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub params: QuadParams,
    pub gains: RateGains,
    pub imu: ImuNoiseModel,
    pub run: RunSettings,
    pub task: TaskSpec,
    pub world: WorldSettings,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            params: QuadParams::default(),
            gains: RateGains::default(),
            imu: ImuNoiseModel::default(),
            run: RunSettings::default(),
            task: TaskSpec::stabilize(),
            world: WorldSettings::default(),
        }
    }
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self, SimError> {
        Self::load_with(path, &[])
    }

    /// Loads `path` (if any) with `overrides` applied on top.
    pub fn load_with(path: Option<&Path>, overrides: &[(&str, String)]) -> Result<Self, SimError> {
        let mut cfg = match path {
            Some(p) => KvConfig::load(p)?,
            None => KvConfig::default(),
        };
        for (k, v) in overrides {
            cfg.set_override(k, v.clone())?;
        }
        Self::from_config(&cfg)
    }

    pub fn from_config(cfg: &KvConfig) -> Result<Self, SimError> {
        let mut s = Settings::default();

        let p = &mut s.params;
        cfg.set_f64("mass", &mut p.mass)?;
        cfg.set_f64("arm_length", &mut p.arm_length)?;
        cfg.set_vec3(["inertia_xx", "inertia_yy", "inertia_zz"], &mut p.inertia)?;
        cfg.set_vec3(["drag_x", "drag_y", "drag_z"], &mut p.drag)?;
        cfg.set_f64("kappa", &mut p.kappa)?;
        cfg.set_f64("motor_tau", &mut p.motor_tau)?;
        cfg.set_f64("thrust_min", &mut p.thrust_min)?;
        cfg.set_f64("thrust_max", &mut p.thrust_max)?;
        p.validate()?;

        cfg.set_vec3(["rate_kp_x", "rate_kp_y", "rate_kp_z"], &mut s.gains.kp)?;
        s.gains.validate()?;

        let imu = &mut s.imu;
        cfg.set_f64("imu_accel_std", &mut imu.accel_noise_std)?;
        cfg.set_f64("imu_gyro_std", &mut imu.gyro_noise_std)?;
        cfg.set_vec3(["imu_accel_bias_x", "imu_accel_bias_y", "imu_accel_bias_z"], &mut imu.accel_bias)?;
        cfg.set_vec3(["imu_gyro_bias_x", "imu_gyro_bias_y", "imu_gyro_bias_z"], &mut imu.gyro_bias)?;
        imu.validate()?;

        let r = &mut s.run;
        if let Some(n) = cfg.get("n_envs")? {
            r.n_envs = n;
        }
        if let Some(n) = cfg.get("n_workers")? {
            r.n_workers = n;
        }
        cfg.set_f64("dt", &mut r.dt)?;
        if let Some(m) = cfg.get::<Integrator>("method")? {
            r.method = m;
        }
        if let Some(seed) = cfg.get("seed")? {
            r.seed = seed;
        }

        s.task = task_from_config(cfg, r.dt)?;

        let w = &mut s.world;
        cfg.set_vec3(["world_min_x", "world_min_y", "world_min_z"], &mut w.bounds.min)?;
        cfg.set_vec3(["world_max_x", "world_max_y", "world_max_z"], &mut w.bounds.max)?;
        cfg.set_f64("resolution", &mut w.resolution)?;
        cfg.set_f64("density", &mut w.density)?;

        Ok(s)
    }
}

fn task_from_config(cfg: &KvConfig, dt: f64) -> Result<TaskSpec, SimError> {
    let kind = cfg.get::<TaskKind>("task")?.unwrap_or(TaskKind::Stabilize);
    let mut t = TaskSpec::for_kind(kind);
    t.dt = dt;
    cfg.set_f64("episode_length", &mut t.episode_length)?;
    cfg.set_f64("reward_c1", &mut t.weights.position)?;
    cfg.set_f64("reward_c2", &mut t.weights.attitude)?;
    cfg.set_f64("reward_c3", &mut t.weights.velocity)?;
    cfg.set_f64("reward_c4", &mut t.weights.body_rates)?;
    cfg.set_vec3(["target_x", "target_y", "target_z"], &mut t.target.position)?;
    cfg.set_vec3(["target_roll", "target_pitch", "target_yaw"], &mut t.target.euler)?;
    cfg.set_vec3(["gate_x", "gate_y", "gate_z"], &mut t.gate.position)?;
    cfg.set_vec3(["gate_roll", "gate_pitch", "gate_yaw"], &mut t.gate.euler)?;
    cfg.set_f64("gate_radius", &mut t.gate.radius)?;
    cfg.set_f64("gate_hit_margin", &mut t.gate.hit_margin)?;
    cfg.set_f64("body_rate_limit", &mut t.body_rate_limit)?;
    if let Some(rotor) = cfg.get::<usize>("failed_rotor")? {
        if !(1..=4).contains(&rotor) {
            return Err(SimError::Argument("failed_rotor must be 1, 2, 3 or 4".into()));
        }
        t.failed_rotor = rotor - 1;
    }
    match cfg.raw("attitude_encoding") {
        None => {}
        Some("euler") => t.attitude_encoding = AttitudeEncoding::EulerPadded,
        Some("quaternion") => t.attitude_encoding = AttitudeEncoding::Quaternion,
        Some(other) => {
            return Err(SimError::Argument(format!(
                "attitude_encoding must be euler or quaternion, got `{other}`"
            )))
        }
    }
    match cfg.raw("ground_z") {
        None => {}
        Some("none") => t.ground_z = None,
        Some(_) => t.ground_z = cfg.get("ground_z")?,
    }

    let sm = &mut t.sampler;
    cfg.set_vec3(["init_x", "init_y", "init_z"], &mut sm.center)?;
    if let Some(h) = cfg.get::<f64>("init_pos_range")? {
        sm.position_half = Vector3::repeat(h);
    }
    if let Some(h) = cfg.get::<f64>("init_att_range_deg")? {
        sm.attitude_half = Vector3::repeat(h.to_radians());
    }
    if let Some(h) = cfg.get::<f64>("init_vel_range")? {
        sm.velocity_half = Vector3::repeat(h);
    }
    if let Some(h) = cfg.get::<f64>("init_rate_range")? {
        sm.body_rate_half = Vector3::repeat(h);
    }
    t.validate()?;
    Ok(t)
}
