//! Counter-based random streams.
//!
//! Every consumer of randomness asks for the stream keyed by
//! `(seed, purpose, index)`. The ChaCha key is derived from the seed and the
//! purpose tag, the index selects the ChaCha stream, so the numbers drawn for
//! path `i` never depend on which thread generated it or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. Distinct purposes never share a key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Paths,
    Bootstrap,
    RandomTimes,
    Suite,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Paths => 0x7061_7468_7300_0001,
            Purpose::Bootstrap => 0x626f_6f74_0000_0002,
            Purpose::RandomTimes => 0x7469_6d65_7300_0003,
            Purpose::Suite => 0x7375_6974_6500_0004,
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Returns the generator for stream `index` of `purpose` under `seed`.
pub fn stream(seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    let mut state = seed ^ purpose.tag();
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
