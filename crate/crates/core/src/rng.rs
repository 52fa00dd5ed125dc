//! Counter-based stream derivation.
//!
//! Every random stream in a run is a ChaCha8 generator keyed by the master
//! seed, with the ChaCha stream id and word position derived from a
//! (purpose, round, index) triple. Streams never overlap and do not depend on
//! the order in which threads request them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Words reserved for each sub-stream. 2^36 words is far beyond any single
/// chunk's consumption.
const SUBSTREAM_WORDS: u128 = 1 << 36;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Purpose {
    Agents = 1,
    Markets = 2,
    Oracle = 3,
}

/// Deterministic generator for `(purpose, round, index)` under `seed`.
pub fn stream(seed: u64, purpose: Purpose, round: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 56) ^ round);
    rng.set_word_pos(index as u128 * SUBSTREAM_WORDS);
    rng
}

/// Seed for the `replica`-th independent replica of a run.
pub fn replica_seed(seed: u64, replica: u64) -> u64 {
    // splitmix64 finaliser
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(replica + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
