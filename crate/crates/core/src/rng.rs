//! Seeded random streams. Every agent of run `seed` owns its own ChaCha
//! stream, so adding agents never perturbs the draws of existing ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream of agent `agent` within the run seeded by `seed`.
pub fn agent_stream(seed: u64, agent: usize) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(agent as u64 + 1);
    rng
}

/// Stream reserved for the engine itself (stream 0).
pub fn engine_stream(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}
