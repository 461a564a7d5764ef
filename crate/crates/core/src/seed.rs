//! Seed streams.
//!
//! Every trajectory, sample block or schedule draws from its own ChaCha
//! stream selected by `(master seed, stream id)`, so results never depend on
//! how work is partitioned across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream_rng(master: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed, e.g. the schedule seed of trajectory `id`.
pub fn derive(master: u64, id: u64) -> u64 {
    mix64(master ^ mix64(id.wrapping_add(0x5851_f42d_4c95_7f2d)))
}
