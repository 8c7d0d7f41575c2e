//! Deterministic substreams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream keyed by
//! `(seed, tag)` and selected by an index, so any subinterval or ensemble
//! member can be regenerated independently of how work was scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) const TAG_EVENTS: u64 = 0x6576_656e_7473;
pub(crate) const TAG_JUMPS: u64 = 0x006a_756d_7073;
pub(crate) const TAG_BURN_EVENTS: u64 = 0x6275_726e_6576;
pub(crate) const TAG_BURN_JUMPS: u64 = 0x6275_726e_6a6d;
const TAG_ENSEMBLE: u64 = 0x656e_7365_6d62;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for stream `index` of the family `(seed, tag)`.
pub fn substream(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    let key = splitmix64(seed ^ splitmix64(tag));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(index);
    rng
}

/// Seed for the `index`-th member of an ensemble rooted at `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ TAG_ENSEMBLE).wrapping_add(index))
}
