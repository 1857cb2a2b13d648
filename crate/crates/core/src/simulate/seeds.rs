//! Deterministic derivation of independent random streams from one 64-bit seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose of a derived stream. Distinct purposes never share a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Noise = 1,
    HurstPath = 2,
    NuPath = 3,
    Segment = 4,
    MonteCarlo = 5,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for item `index` of stream `purpose`.
pub fn derive_seed(seed: u64, purpose: Stream, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64((purpose as u64) << 56 ^ splitmix64(index)))
}

/// RNG for item `index` of stream `purpose` under `seed`.
///
/// The ChaCha key comes from `seed` and the stream id from `(purpose, index)`,
/// so any component can be regenerated without replaying the others.
pub fn rng_for(seed: u64, purpose: Stream, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(splitmix64((purpose as u64) << 56 ^ index));
    rng
}
