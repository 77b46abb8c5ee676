//! Portable seed derivation.
//!
//! Every random stream in a decode is keyed by a hash of the master seed and
//! a structured label (problem id, replica index, tree path). Keys are
//! SHA-256 over type-tagged, length-prefixed fields, so derived seeds do not
//! depend on platform, thread schedule, or the std hasher.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Generator used for all sampling.
pub type DecodeRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> DecodeRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone)]
pub struct SeedKey(Sha256);

impl SeedKey {
    pub fn new(master: u64) -> Self {
        let mut h = Sha256::new();
        h.update(b"entropy-tree/seed/v1");
        h.update(master.to_le_bytes());
        Self(h)
    }

    pub fn str(mut self, s: &str) -> Self {
        self.0.update([0x01]);
        self.0.update((s.len() as u64).to_le_bytes());
        self.0.update(s.as_bytes());
        self
    }

    pub fn num(mut self, n: u64) -> Self {
        self.0.update([0x02]);
        self.0.update(n.to_le_bytes());
        self
    }

    pub fn path(mut self, path: &[usize]) -> Self {
        self.0.update([0x03]);
        self.0.update((path.len() as u64).to_le_bytes());
        for &i in path {
            self.0.update((i as u64).to_le_bytes());
        }
        self
    }

    pub fn finish(self) -> u64 {
        let digest = self.0.finalize();
        let mut bytes = [0u8; 8];
        bytes.copy_from_slice(&digest[..8]);
        u64::from_le_bytes(bytes)
    }
}

/// Seed of the `replica`-th generation for a problem.
pub fn problem_seed(master: u64, problem_id: &str, replica: u64) -> u64 {
    SeedKey::new(master).str("problem").str(problem_id).num(replica).finish()
}

/// Seed owned by the tree path identified by its child indices from the root.
pub fn path_seed(master: u64, path: &[usize]) -> u64 {
    SeedKey::new(master).str("path").path(path).finish()
}
