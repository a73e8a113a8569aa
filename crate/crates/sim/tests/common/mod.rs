#![allow(dead_code)]

use std::sync::Arc;
use std::time::Instant;

use flightcore::rng::stream;
use flightcore::tasks::InitSampler;
use flightcore::world::Aabb;
use flightcore::{Command, QuadState, Vector3};
use flightcore_sim::bridge::protocol::{TAG_ERROR, TAG_HELLO};
use flightcore_sim::bridge::{BridgeServer, ForestSource, SimBackend};
use flightcore_sim::{ply, VecSim, VecSimConfig};
use rand::Rng;

pub fn hover_sim(n_envs: usize) -> VecSim {
    let mut sim = VecSim::new(VecSimConfig {
        n_envs,
        sampler: InitSampler::fixed(Vector3::new(0.0, 0.0, 5.0)),
        ..VecSimConfig::default()
    })
    .unwrap();
    sim.reset().unwrap();
    sim
}

pub fn start_server(n_envs: usize) -> (BridgeServer, Arc<SimBackend>) {
    let backend = SimBackend::new(hover_sim(n_envs), ForestSource { density: 0.3, seed: 11 });
    let server = BridgeServer::bind("127.0.0.1:0", backend.clone()).unwrap();
    (server, backend)
}

pub fn hover_commands(sim: &VecSim) -> Vec<Command> {
    (0..sim.n_envs())
        .map(|i| Command::RotorThrusts([sim.model(i).params().hover_thrust(); 4]))
        .collect()
}

/// Steps `steps` batches with publishing; returns environment steps per second.
pub fn publish_rate(server: &BridgeServer, backend: &SimBackend, steps: usize) -> f64 {
    let start = Instant::now();
    let mut envs = 0usize;
    for _ in 0..steps {
        envs += backend.step_and_publish(server, hover_commands).unwrap();
    }
    envs as f64 / start.elapsed().as_secs_f64()
}

/// Frames with random lengths, tags and bodies; some lengths lie.
pub fn fuzz_frames(seed: u64, count: usize) -> Vec<Vec<u8>> {
    let mut rng = stream(seed, 0);
    (0..count)
        .map(|_| {
            let body_len = rng.random_range(0..200usize);
            let mut body: Vec<u8> = (0..body_len).map(|_| rng.random()).collect();
            let tag = if rng.random_bool(0.8) {
                rng.random_range(TAG_HELLO..=TAG_ERROR)
            } else {
                rng.random()
            };
            let claimed: u32 = match rng.random_range(0..4) {
                0 => rng.random(),
                1 => body_len as u32 + rng.random_range(1..16),
                _ => body_len as u32,
            };
            if claimed as usize > body_len && claimed < 4096 {
                body.resize(claimed as usize, 0);
            }
            let mut frame = claimed.to_le_bytes().to_vec();
            frame.push(tag);
            frame.extend_from_slice(&body);
            frame
        })
        .collect()
}

/// Applies one random edit inside the header of a PLY file.
pub fn mutate_header(bytes: &[u8], rng: &mut impl Rng) -> Vec<u8> {
    let header_len = bytes
        .windows(11)
        .position(|w| w == b"end_header\n")
        .map(|p| p + 11)
        .unwrap();
    let mut out = bytes.to_vec();
    let at = rng.random_range(0..header_len);
    match rng.random_range(0..6) {
        0 => {
            let mut b: u8 = rng.random();
            while b == out[at] {
                b = rng.random();
            }
            out[at] = b;
        }
        1 => {
            out.remove(at);
        }
        2 => out.insert(at, rng.random()),
        3 => {
            let pick = [b' ', b'\n', b'0', b'9', b'-', b'+', b'\r', b'\t'];
            out.insert(at, pick[rng.random_range(0..pick.len())]);
        }
        4 => {
            out.truncate(at);
        }
        _ => {
            let swap = rng.random_range(0..header_len);
            out.swap(at, swap);
            if out == bytes {
                out[at] ^= 0x20;
            }
        }
    }
    out
}

/// Exact squared distance from `p` to the segment `a → b`.
pub fn segment_distance_sq(p: &Vector3<f64>, a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let ab = b - a;
    let len_sq = ab.norm_squared();
    let t = if len_sq == 0.0 {
        0.0
    } else {
        ((p - a).dot(&ab) / len_sq).clamp(0.0, 1.0)
    };
    (a + ab * t - p).norm_squared()
}

/// Linear-scan check that every segment of `path` keeps at least `radius`
/// from every point. Returns the smallest clearance found.
pub fn path_clearance(points: &[[f32; 3]], path: &[Vector3<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    for seg in path.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        for p in points {
            let p = Vector3::new(f64::from(p[0]), f64::from(p[1]), f64::from(p[2]));
            best = best.min(segment_distance_sq(&p, &a, &b));
        }
    }
    best.sqrt()
}

/// Linear-scan clearance of a single point.
pub fn point_clearance(points: &[[f32; 3]], q: &Vector3<f64>) -> f64 {
    points
        .iter()
        .map(|p| (Vector3::new(f64::from(p[0]), f64::from(p[1]), f64::from(p[2])) - q).norm_squared())
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}

/// First point of a coarse scan over `region` whose clearance exceeds `radius`.
pub fn free_point(points: &[[f32; 3]], region: &Aabb, radius: f64) -> Vector3<f64> {
    let steps = 8;
    for i in 0..=steps {
        for j in 0..=steps {
            let f = |k: usize, axis: usize| {
                region.min[axis] + (region.max[axis] - region.min[axis]) * k as f64 / steps as f64
            };
            let q = Vector3::new(f(i, 0), f(j, 1), 0.5 * (region.min.z + region.max.z));
            if point_clearance(points, &q) > radius + 0.05 {
                return q;
            }
        }
    }
    panic!("no free point in region");
}

pub fn ply_bytes_for(bounds: Aabb, resolution: f64, density: f64, seed: u64) -> Vec<u8> {
    let cloud = flightcore::world::generate_forest(bounds, resolution, density, seed).unwrap();
    ply::encode(&cloud)
}

pub fn states_equal_bits(a: &[QuadState], b: &[QuadState]) -> bool {
    flightcore_sim::vecenv::state_digest(a) == flightcore_sim::vecenv::state_digest(b) && a == b
}
