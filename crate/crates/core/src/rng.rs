//! Seeded random streams.
//!
//! Every environment owns one ChaCha8 stream keyed by `(base_seed, env_id)`,
//! so draws never depend on scheduling or on how many environments exist.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Independent stream `stream_id` derived from `base_seed`.
pub fn stream(base_seed: u64, stream_id: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(stream_id);
    rng
}
