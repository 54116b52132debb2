//! Reproducible random streams.
//!
//! Every trajectory draws from its own ChaCha8 stream: the user seed fixes the
//! key and the trajectory id selects the stream. Results are therefore identical
//! regardless of thread count or scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TrajectoryRng = ChaCha8Rng;

/// Name recorded in output metadata.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng::seed_from_u64(seed), stream = trajectory id";

pub fn seeded_rng(seed: u64) -> TrajectoryRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn trajectory_rng(seed: u64, trajectory: u64) -> TrajectoryRng {
    let mut rng = seeded_rng(seed);
    rng.set_stream(trajectory);
    rng
}
