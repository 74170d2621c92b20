//! Seed derivation and random sign vectors indexed by Haar functions.

use pseudoloc_core::haar::{FiniteHaarExpansion, HaarIndex};
use sha2::{Digest, Sha256};

/// A 64-bit seed from a base seed and a row key, independent of evaluation order.
pub fn derive_seed(seed: u64, key: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(key.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

/// Independent uniform `±1` signs `ε_I`, one per Haar index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SignVector {
    pub seed: u64,
}

impl SignVector {
    pub fn new(seed: u64) -> Self {
        SignVector { seed }
    }

    pub fn sign(&self, h: &HaarIndex) -> f64 {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(h.level().to_le_bytes());
        hasher.update([h.eta()]);
        for m in h.cube().index() {
            hasher.update(m.to_le_bytes());
        }
        if hasher.finalize()[0] & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// `Σ ε_I α_I h_I`.
    pub fn apply(&self, f: &FiniteHaarExpansion) -> FiniteHaarExpansion {
        f.map_coefficients(|h, a| self.sign(h) * a)
    }
}
