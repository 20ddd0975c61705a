//! Stable seed derivation.
//!
//! Every random stream in the toolkit is keyed by a master seed plus a short
//! list of labels (user id, session id, purpose). Keys are hashed with
//! SHA-256 so derived seeds do not depend on generation order or on the
//! platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Derive a 64-bit seed from a master seed and a label path.
pub fn derive(master: u64, labels: &[&str]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    for label in labels {
        // length prefix keeps ["ab", "c"] and ["a", "bc"] apart
        hasher.update((label.len() as u64).to_le_bytes());
        hasher.update(label.as_bytes());
    }
    let digest = hasher.finalize();
    let mut out = [0u8; 8];
    out.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(out)
}

/// Deterministic generator for a derived stream.
pub fn rng(master: u64, labels: &[&str]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(master, labels))
}
