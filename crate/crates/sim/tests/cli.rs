use std::io::Write;
use std::process::{Command, Output, Stdio};

use flightcore_sim::bridge::{BridgeClient, ConfigureRequest, Message};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_flightcore"));
    c.env_remove("FLIGHTCORE_BRIDGE").env_remove("FLIGHTCORE_CONFIG");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn bench_sweep_is_cartesian_with_header() {
    let o = run(&["bench", "--envs", "1,10,150", "--workers", "1,4", "--duration", "0.05"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n_envs,n_workers,dt,method,steps_per_second");
    assert_eq!(lines.len(), 7);
    let pairs: Vec<(String, String)> = lines[1..]
        .iter()
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            assert_eq!(f.len(), 5);
            assert!(f[4].parse::<f64>().unwrap() > 0.0);
            (f[0].to_string(), f[1].to_string())
        })
        .collect();
    assert_eq!(pairs[0], ("1".into(), "1".into()));
    assert_eq!(pairs[5], ("150".into(), "4".into()));
    assert!(String::from_utf8_lossy(&o.stderr).contains("peak"));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(run(&["bench", "--duration", "0"]).status.code(), Some(2));
    assert_eq!(run(&["bench", "--envs", "0", "--duration", "0.01"]).status.code(), Some(2));
    assert_eq!(run(&["run", "--controller", "pid"]).status.code(), Some(2));
    assert_eq!(run(&["run", "--frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["teleport"]).status.code(), Some(2));
    assert_eq!(run(&["run", "--task", "racing"]).status.code(), Some(2));
    assert_eq!(run(&["run", "--dt", "-1"]).status.code(), Some(2));
    let o = run(&["run", "--frobnicate"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn runtime_errors_exit_with_one() {
    let o = run(&["plan", "--world", "/no/such/world.ply"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["run", "--config", "/no/such/config.cfg"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn zero_episodes_prints_empty_summary() {
    let o = run(&["run", "--episodes", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "summary episodes=0 mean_return=0.000000000\n");
}

#[test]
fn hover_from_exact_hover_earns_zero_reward() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("hover.cfg");
    std::fs::write(
        &cfg,
        "task = stabilize\ninit_x = 0\ninit_y = 0\ninit_z = 5\ninit_pos_range = 0\n\
         init_att_range_deg = 0\ninit_vel_range = 0\ninit_rate_range = 0\n",
    )
    .unwrap();
    let o = run(&["run", "--config", cfg.to_str().unwrap(), "--controller", "hover", "--episodes", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let episodes: Vec<&str> = text.lines().filter(|l| l.starts_with("episode=")).collect();
    assert_eq!(episodes.len(), 2);
    for line in episodes {
        let ret: f64 = line.split(' ').nth(1).unwrap().trim_start_matches("return=").parse().unwrap();
        assert!(ret > -1e-6, "{line}");
        assert!(line.contains("steps=250"));
        assert!(line.ends_with("reason=timeout"));
    }
}

#[test]
fn runs_are_reproducible_per_seed() {
    for controller in ["hover", "random"] {
        let args = ["run", "--controller", controller, "--episodes", "3", "--seed", "17", "--task", "gate"];
        let a = run(&args);
        let b = run(&args);
        assert_eq!(a.status.code(), Some(0));
        assert_eq!(a.stdout, b.stdout);
    }
    let a = run(&["run", "--controller", "random", "--episodes", "2", "--seed", "1"]);
    let b = run(&["run", "--controller", "random", "--episodes", "2", "--seed", "2"]);
    assert_ne!(a.stdout, b.stdout);
}

#[test]
fn random_controller_scores_below_hover() {
    let mean = |controller: &str| -> f64 {
        let o = run(&["run", "--controller", controller, "--episodes", "20", "--seed", "4"]);
        let text = stdout(&o);
        let last = text.lines().last().unwrap();
        last.split("mean_return=").nth(1).unwrap().parse().unwrap()
    };
    assert!(mean("random") < mean("hover"));
}

#[test]
fn external_controller_line_protocol() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("short.cfg");
    std::fs::write(&cfg, "task = motor_failure\nepisode_length = 1\n").unwrap();
    let mut child = bin()
        .args(["run", "--controller", "external", "--episodes", "1", "--config", cfg.to_str().unwrap()])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    {
        let mut stdin = child.stdin.take().unwrap();
        for _ in 0..50 {
            writeln!(stdin, "3.0 3.0 3.0").unwrap();
        }
    }
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let obs: Vec<&str> = text.lines().filter(|l| l.starts_with("obs ")).collect();
    assert_eq!(obs.len(), 50);
    assert_eq!(obs[0].split(' ').count(), 1 + 12);
    assert!(text.contains("steps=50"));
}

#[test]
fn external_controller_eof_is_a_runtime_error() {
    let out = bin()
        .args(["run", "--controller", "external"])
        .stdin(Stdio::null())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn world_writes_ply_and_plan_reads_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("world.cfg");
    std::fs::write(&cfg, "world_max_x = 20\nworld_max_y = 20\nworld_max_z = 5\ndensity = 0.2\n").unwrap();
    let ply_path = dir.path().join("w.ply");
    let o = run(&["world", "--config", cfg.to_str().unwrap(), "--seed", "5", "--out", ply_path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let bytes = std::fs::read(&ply_path).unwrap();
    assert!(bytes.starts_with(b"ply\nformat binary_little_endian 1.0\nelement vertex "));

    let again = run(&["world", "--config", cfg.to_str().unwrap(), "--seed", "5"]);
    assert_eq!(again.stdout, bytes);

    let o = run(&[
        "plan",
        "--world",
        ply_path.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--start",
        "0.5,0.5,2.5",
        "--goal",
        "19.5,19.5,2.5",
        "--radius",
        "0.1",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,y,z");
    assert!(lines.len() >= 3);
}

#[test]
fn serve_streams_states_to_a_client() {
    let port = {
        let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap().port()
    };
    let addr = format!("127.0.0.1:{port}");
    let child = bin()
        .args(["serve", "--envs", "2", "--duration", "3"])
        .env("FLIGHTCORE_BRIDGE", &addr)
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut client = None;
    for _ in 0..200 {
        if let Ok(c) = BridgeClient::connect(&addr) {
            client = Some(c);
            break;
        }
        std::thread::sleep(std::time::Duration::from_millis(10));
    }
    let mut client = client.expect("server did not start");
    let wait = std::time::Duration::from_secs(5);
    client
        .configure(
            ConfigureRequest {
                n_envs: 5,
                dt: 0.01,
                params_digest: flightcore::QuadParams::default().digest(),
            },
            wait,
        )
        .unwrap();
    let update = client
        .wait_for(wait, |e| matches!(e.message, Message::StateUpdate { .. }))
        .unwrap();
    assert!(matches!(update.message, Message::StateUpdate { ref poses, .. } if poses.len() == 5));
    drop(client);
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("connections=1"));
}
