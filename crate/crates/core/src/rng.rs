//! Deterministic random streams keyed by run seed, node and purpose.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Generation = 1,
    Forwarding = 2,
    ForwarderSelection = 3,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Order-sensitive hash of a sequence of integers.
pub fn mix_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x6a09_e667_f3bc_c909, |acc, &p| {
        splitmix64(acc ^ splitmix64(p))
    })
}

pub fn stream(run_seed: u64, node: u32, purpose: Purpose) -> StreamRng {
    StreamRng::seed_from_u64(mix_seed(&[run_seed, u64::from(node), purpose as u64]))
}
