//! Counter-based random streams.
//!
//! Every stochastic draw in a run comes from a ChaCha stream addressed by
//! `(master_seed, stream, round)`, so the order in which agents are
//! processed (or the number of worker threads) never changes the output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random stream handed to oracles.
pub type AgentRng = ChaCha8Rng;

/// Word offset reserved for each round inside an agent stream.
const ROUND_STRIDE: u128 = 1 << 40;

/// Stream ids at the top of the range are reserved for experiment setup.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetupStream {
    Parameters = 1,
    AttackedSet = 2,
    Positions = 3,
    Dataset = 4,
}

/// RNG for agent `agent` at round `round`.
pub fn agent_stream(master_seed: u64, agent: usize, round: u64) -> AgentRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(agent as u64);
    rng.set_word_pos(round as u128 * ROUND_STRIDE);
    rng
}

/// RNG for one-off setup draws (true parameters, attacked set, ...).
pub fn setup_stream(master_seed: u64, which: SetupStream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(u64::MAX - which as u64);
    rng
}

/// SplitMix64 finalizer; used to derive child seeds for sweeps.
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    let mut z = master_seed
        .wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
