//! Deterministic random streams.
//!
//! A single master seed fans out into independent named streams, one per
//! consumer, so that the order in which different consumers interleave
//! their draws never couples them to each other. This is what lets the
//! direct and per-relationship generation engines replay the exact same
//! randomness even though they resolve events in different orders.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Default seed used by the CLI when none is given, so documented commands
/// reproduce byte-identical outputs.
pub const DEFAULT_SEED: u64 = 0x5EED_C0DE;

/// Derive an independent stream from the master seed. `tag` names the
/// consumer; `a` and `b` carry consumer-specific indices (for example
/// relationship id and role).
pub fn derive_rng(seed: u64, tag: &str, a: u64, b: u64) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(tag.as_bytes());
    h.update(seed.to_le_bytes());
    h.update(a.to_le_bytes());
    h.update(b.to_le_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

/// Plain seeded generator for contexts that need a single stream.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
