//! Seed fan-out.
//!
//! Every source of randomness in a run is a substream derived from the
//! master seed and a list of string tags, via a splitmix64 absorb/finalize
//! step. Components never share a stream, so adding a consumer somewhere
//! cannot shift the randomness seen elsewhere.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// The RNG used throughout the crate. ChaCha keeps streams reproducible
/// across platforms and rust versions.
pub type RunRng = ChaCha12Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// splitmix64 step: advances `state` and returns the next output.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a 64-bit child seed from `master` and the tag path.
pub fn derive_seed(master: u64, tags: &[&str]) -> u64 {
    let mut state = master;
    let _ = splitmix64(&mut state);
    for tag in tags {
        for &byte in tag.as_bytes() {
            state ^= u64::from(byte);
            let _ = splitmix64(&mut state);
        }
        // tag separator so ["ab"] != ["a", "b"]
        state ^= 0xff;
        let _ = splitmix64(&mut state);
    }
    splitmix64(&mut state)
}

/// Builds the substream identified by `(master, tags)`.
pub fn substream(master: u64, tags: &[&str]) -> RunRng {
    let mut state = derive_seed(master, tags);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}
