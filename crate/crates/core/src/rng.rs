//! Counter-based RNG stream derivation.
//!
//! A master seed plus a domain tag selects a ChaCha key; the per-item index selects the
//! ChaCha stream. Stream `i` is the same no matter which thread draws it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Domain tags keep the streams of different pipeline stages disjoint.
pub mod domain {
    pub const CATALOG: u64 = 0x01;
    pub const POPULATION: u64 = 0x02;
    pub const DESIGN: u64 = 0x03;
    pub const SESSION: u64 = 0x04;
    pub const SPLIT_HALF: u64 = 0x05;
    pub const SAMPLE_SIZE: u64 = 0x06;
    pub const EVALUATION: u64 = 0x07;
    pub const TEST: u64 = 0xfe;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent stream `index` of `domain` under `seed`.
pub fn stream(seed: u64, domain: u64, index: u64) -> SimRng {
    let key = splitmix64(seed ^ splitmix64(domain));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(index);
    rng
}
