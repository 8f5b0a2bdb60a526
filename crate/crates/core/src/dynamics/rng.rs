//! Counter-based random streams.
//!
//! Every sample column draws from its own ChaCha stream, addressed by
//! `(master seed, purpose, column index)`, so parallel and sequential
//! generation produce identical output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for; streams for different purposes never overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Placement,
    Noise,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream(seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    let salt = match purpose {
        Purpose::Placement => 0x5EED_0001,
        Purpose::Noise => 0x5EED_0002,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ salt));
    rng.set_stream(index);
    rng
}
