use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use flightcore::policy::Policy;
use flightcore::tasks::TaskKind;
use flightcore::world::{generate_forest, path_length, Aabb, OccupancyCloud, PathQuery, PlanOutcome, RrtConfig};
use flightcore::{Command, Integrator, Vector3};
use flightcore_sim::bench::{self, BenchConfig};
use flightcore_sim::bridge::{self, BridgeServer, ForestSource, SimBackend, BRIDGE_ENV};
use flightcore_sim::config::Settings;
use flightcore_sim::planning::plan_with_deadline;
use flightcore_sim::runner::{self, ControllerKind, LinePolicy, RunConfig};
use flightcore_sim::{ply, ParamsSource, SimError, VecSim, VecSimConfig};

#[derive(Parser)]
#[command(name = "flightcore", version, about = "Quadrotor simulation, benchmarking and planning tools")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Measure stepping throughput over env and worker counts (CSV).
    Bench(BenchArgs),
    /// Run task episodes with a scripted or external controller.
    Run(RunArgs),
    /// Generate a forest and write it as binary PLY.
    World(WorldArgs),
    /// Plan a collision-free path through a forest.
    Plan(PlanArgs),
    /// Simulate hovering vehicles and stream their states over the bridge.
    Serve(ServeArgs),
}

#[derive(Args)]
struct Common {
    /// Configuration file (`key = value` lines).
    #[arg(long, env = "FLIGHTCORE_CONFIG")]
    config: Option<PathBuf>,
    /// Base random seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated environment counts.
    #[arg(long, value_delimiter = ',', default_value = "1,10,150")]
    envs: Vec<usize>,
    /// Comma-separated worker counts.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    workers: Vec<usize>,
    /// Step size, seconds.
    #[arg(long)]
    dt: Option<f64>,
    /// Integrator: rk4 or euler.
    #[arg(long)]
    method: Option<Integrator>,
    /// Seconds spent on each sweep point.
    #[arg(long, default_value_t = 1.0)]
    duration: f64,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Task: stabilize, motor_failure or gate.
    #[arg(long)]
    task: Option<TaskKind>,
    /// Controller: hover, random or external (line protocol on stdin/stdout).
    #[arg(long, default_value = "hover")]
    controller: String,
    #[arg(long, default_value_t = 1)]
    episodes: usize,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    method: Option<Integrator>,
    /// Publish states to a bridge endpoint `host:port`.
    #[arg(long, env = BRIDGE_ENV)]
    bridge: Option<String>,
}

#[derive(Args)]
struct WorldArgs {
    #[command(flatten)]
    common: Common,
    /// Trunk probability per lattice site.
    #[arg(long)]
    density: Option<f64>,
    /// Grid resolution, meters.
    #[arg(long)]
    resolution: Option<f64>,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    common: Common,
    /// Read the world from a PLY file instead of generating it.
    #[arg(long)]
    world: Option<PathBuf>,
    /// Start point `x,y,z`.
    #[arg(long, value_parser = parse_point)]
    start: Option<Vector3<f64>>,
    /// Goal point `x,y,z`.
    #[arg(long, value_parser = parse_point)]
    goal: Option<Vector3<f64>>,
    /// Robot radius, meters.
    #[arg(long, default_value_t = 0.3)]
    radius: f64,
    /// Wall-clock budget, seconds.
    #[arg(long, default_value_t = 1.0)]
    budget: f64,
}

#[derive(Args)]
struct ServeArgs {
    #[command(flatten)]
    common: Common,
    /// Endpoint `host:port`.
    #[arg(long, env = BRIDGE_ENV, default_value = "127.0.0.1:7450")]
    bridge: String,
    #[arg(long)]
    envs: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    method: Option<Integrator>,
    /// Seconds of wall-clock time to serve.
    #[arg(long, default_value_t = 10.0)]
    duration: f64,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Argument(_) | SimError::Config { .. } => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<flightcore::Error> for Failure {
    fn from(e: flightcore::Error) -> Self {
        SimError::from(e).into()
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn parse_point(s: &str) -> Result<Vector3<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| format!("`{s}` is not a point x,y,z"))?;
    match v.as_slice() {
        [x, y, z] if v.iter().all(|c| c.is_finite()) => Ok(Vector3::new(*x, *y, *z)),
        _ => Err(format!("`{s}` is not a point x,y,z")),
    }
}

fn settings(common: &Common, mut overrides: Vec<(&str, String)>) -> Result<Settings, Failure> {
    if let Some(seed) = common.seed {
        overrides.push(("seed", seed.to_string()));
    }
    Settings::load_with(common.config.as_deref(), &overrides).map_err(|e| match e {
        SimError::Io { .. } => Failure::Runtime(e.to_string()),
        other => Failure::Usage(other.to_string()),
    })
}

/// Collects `Some` flag values as configuration overrides.
fn flags<const N: usize>(pairs: [(&'static str, Option<String>); N]) -> Vec<(&'static str, String)> {
    pairs.into_iter().filter_map(|(k, v)| v.map(|v| (k, v))).collect()
}

fn show<T: ToString>(v: &Option<T>) -> Option<String> {
    v.as_ref().map(ToString::to_string)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn positive(name: &str, v: f64) -> Result<f64, Failure> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Failure::Usage(format!("--{name} must be > 0, got {v}")))
    }
}

fn cmd_bench(a: BenchArgs) -> Result<(), Failure> {
    let s = settings(&a.common, flags([("dt", show(&a.dt)), ("method", show(&a.method))]))?;
    let config = BenchConfig {
        n_envs: a.envs,
        n_workers: a.workers,
        dt: positive("dt", s.run.dt)?,
        method: s.run.method,
        duration: Duration::from_secs_f64(positive("duration", a.duration)?),
        seed: s.run.seed,
        params: s.params,
    };
    config.validate()?;
    let mut out = output(a.common.out.as_deref())?;
    writeln!(out, "{}", bench::CSV_HEADER)?;
    let mut rows = Vec::new();
    for &n in &config.n_envs {
        for &w in &config.n_workers {
            let row = bench::measure(n, w, &config)?;
            writeln!(out, "{}", row.csv())?;
            out.flush()?;
            rows.push(row);
        }
    }
    if let Some(p) = bench::peak(&rows) {
        eprintln!(
            "peak: {:.0} steps/s at n_envs={} n_workers={}",
            p.steps_per_second, p.n_envs, p.n_workers
        );
    }
    Ok(())
}

fn connect_bridge(addr: &str, settings: &Settings, n_envs: usize) -> Result<(BridgeServer, Arc<SimBackend>), Failure> {
    let sim = VecSim::new(VecSimConfig {
        n_envs,
        dt: settings.run.dt,
        method: settings.run.method,
        n_workers: settings.run.n_workers,
        base_seed: settings.run.seed,
        params: ParamsSource::Shared(settings.params),
        gains: settings.gains,
        imu: settings.imu,
        task: None,
        sampler: settings.task.sampler,
    })?;
    let backend = SimBackend::new(
        sim,
        ForestSource {
            density: settings.world.density,
            seed: settings.run.seed,
        },
    );
    let server = BridgeServer::bind(addr, backend.clone())?;
    eprintln!("bridge listening on {}", server.local_addr());
    Ok((server, backend))
}

fn cmd_run(a: RunArgs) -> Result<(), Failure> {
    let controller = ControllerKind::from_str(&a.controller).map_err(Failure::Usage)?;
    let s = settings(
        &a.common,
        flags([
            ("task", a.task.map(|k| k.name().to_string())),
            ("dt", show(&a.dt)),
            ("method", show(&a.method)),
        ]),
    )?;
    let config = RunConfig {
        task: s.task.clone(),
        params: s.params,
        gains: s.gains,
        imu: s.imu,
        method: s.run.method,
        seed: s.run.seed,
        episodes: a.episodes,
    };

    let bridge = match &a.bridge {
        Some(addr) => Some(connect_bridge(addr, &s, 1)?),
        None => None,
    };
    let publish = |r: &flightcore_sim::BatchResult| {
        if let Some((server, _)) = &bridge {
            server.publish(r.states[0].time, bridge::poses(&r.states));
        }
    };

    let mut out = output(a.common.out.as_deref())?;
    let summaries = match controller {
        ControllerKind::Hover => run_with(&config, &mut runner::hover_policy(&config), publish)?,
        ControllerKind::Random => run_with(&config, &mut runner::random_policy(config.seed), publish)?,
        ControllerKind::External => {
            let stdin = io::stdin();
            let mut policy = LinePolicy::new(stdin.lock(), io::stdout());
            run_with(&config, &mut policy, publish)?
        }
    };
    for e in &summaries {
        writeln!(out, "{}", e.line())?;
    }
    writeln!(
        out,
        "summary episodes={} mean_return={:.9}",
        summaries.len(),
        runner::mean_return(&summaries)
    )?;
    out.flush()?;
    Ok(())
}

fn run_with(
    config: &RunConfig,
    policy: &mut dyn Policy,
    publish: impl FnMut(&flightcore_sim::BatchResult),
) -> Result<Vec<runner::EpisodeSummary>, Failure> {
    runner::run_episodes(config, policy, publish).map_err(|e| match e {
        SimError::Core(c) => Failure::Runtime(c.to_string()),
        other => other.into(),
    })
}

fn cmd_world(a: WorldArgs) -> Result<(), Failure> {
    let s = settings(
        &a.common,
        flags([("resolution", show(&a.resolution)), ("density", show(&a.density))]),
    )?;
    let w = &s.world;
    let cloud = generate_forest(w.bounds, w.resolution, w.density, s.run.seed)?;
    let bytes = match &a.common.out {
        Some(p) => ply::export_ply(&cloud, p).map_err(|e| Failure::Runtime(e.to_string()))?,
        None => {
            let mut stdout = io::stdout().lock();
            ply::write(&cloud, &mut stdout)?
        }
    };
    eprintln!("{} points, {} bytes", cloud.len(), bytes);
    Ok(())
}

fn cmd_plan(a: PlanArgs) -> Result<(), Failure> {
    let s = settings(&a.common, Vec::new())?;
    let cloud = match &a.world {
        Some(p) => {
            let loaded =
                ply::import_ply(p, Some(s.world.resolution)).map_err(|e| Failure::Runtime(e.to_string()))?;
            let (cb, wb) = (loaded.bounds(), &s.world.bounds);
            let map = Aabb::new(cb.min.inf(&wb.min), cb.max.sup(&wb.max));
            OccupancyCloud::new(loaded.points().to_vec(), loaded.resolution(), map)?
        }
        None => generate_forest(s.world.bounds, s.world.resolution, s.world.density, s.run.seed)?,
    };
    let b = cloud.bounds();
    let mid_z = 0.5 * (b.min.z + b.max.z);
    let query = PathQuery {
        start: a.start.unwrap_or(Vector3::new(b.min.x + 1.0, b.min.y + 1.0, mid_z)),
        goal: a.goal.unwrap_or(Vector3::new(b.max.x - 1.0, b.max.y - 1.0, mid_z)),
        robot_radius: a.radius,
        time_budget: positive("budget", a.budget)?,
    };
    let (outcome, elapsed) = plan_with_deadline(&cloud, &query, s.run.seed, &RrtConfig::default())?;
    match outcome {
        PlanOutcome::Found(path) => {
            let mut out = output(a.common.out.as_deref())?;
            writeln!(out, "x,y,z")?;
            for p in &path {
                writeln!(out, "{},{},{}", p.x, p.y, p.z)?;
            }
            out.flush()?;
            eprintln!(
                "path: {} waypoints, {:.3} m, {:.3} s",
                path.len(),
                path_length(&path),
                elapsed.as_secs_f64()
            );
            Ok(())
        }
        PlanOutcome::BudgetExhausted => Err(Failure::Runtime(format!(
            "no path found within {} s",
            query.time_budget
        ))),
    }
}

fn cmd_serve(a: ServeArgs) -> Result<(), Failure> {
    let s = settings(
        &a.common,
        flags([
            ("n_envs", show(&a.envs)),
            ("n_workers", show(&a.workers)),
            ("dt", show(&a.dt)),
            ("method", show(&a.method)),
        ]),
    )?;
    let duration = Duration::from_secs_f64(positive("duration", a.duration)?);
    let (server, backend) = connect_bridge(&a.bridge, &s, s.run.n_envs)?;
    backend.sim().reset()?;
    let start = Instant::now();
    let mut steps = 0u64;
    while start.elapsed() < duration {
        steps += backend.step_and_publish(&server, |sim| {
            (0..sim.n_envs())
                .map(|i| Command::RotorThrusts([sim.model(i).params().hover_thrust(); 4]))
                .collect()
        })? as u64;
    }
    let stats = server.stats();
    let mut out = output(a.common.out.as_deref())?;
    writeln!(
        out,
        "steps={} steps_per_second={:.0} published={} delivered={} dropped={} connections={}",
        steps,
        steps as f64 / start.elapsed().as_secs_f64(),
        stats.published,
        stats.delivered,
        stats.dropped,
        stats.connections
    )?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Cmd::Bench(a) => cmd_bench(a),
        Cmd::Run(a) => cmd_run(a),
        Cmd::World(a) => cmd_world(a),
        Cmd::Plan(a) => cmd_plan(a),
        Cmd::Serve(a) => cmd_serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
