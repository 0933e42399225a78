//! Seed derivation and content hashing.
//!
//! Every random decision draws from its own ChaCha stream keyed by
//! `(purpose, global seed, key)`, so results do not depend on generation order.

use alloc::string::String;
use core::fmt::Write;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Deterministic RNG stream for one decision.
pub fn stream(purpose: &str, seed: u64, key: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(purpose.as_bytes());
    h.update([0u8]);
    h.update(seed.to_le_bytes());
    h.update(key.as_bytes());
    let digest = h.finalize();
    let mut bytes = [0u8; 32];
    bytes.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(bytes)
}

/// Lowercase hex of the SHA-256 digest.
pub fn sha256_hex(data: &[u8]) -> String {
    let digest = Sha256::digest(data);
    let mut s = String::with_capacity(64);
    for b in digest.iter() {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// Short stable identifier: the first 16 hex digits of the content hash.
pub fn content_id(data: &[u8]) -> String {
    let mut s = sha256_hex(data);
    s.truncate(16);
    s
}
