//! Seeded, splittable random streams.
//!
//! Every randomized operation in this crate takes an explicit stream. Child
//! streams are derived from a stream's *key*, not from its draw position, so
//! substream derivation is independent of how many values the parent has
//! already produced. The harness derives substreams by (trial, level, depth,
//! particle index) so experiments replay exactly.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn mix(key: u64, tag: u64) -> u64 {
    splitmix64(key ^ splitmix64(tag.wrapping_add(0xa076_1d64_78bd_642f)))
}

/// A deterministic random stream identified by a 64-bit key.
#[derive(Clone)]
pub struct RngStream {
    key: u64,
    rng: ChaCha12Rng,
}

impl RngStream {
    pub fn from_seed(seed: u64) -> Self {
        Self::from_key(splitmix64(seed))
    }

    fn from_key(key: u64) -> Self {
        let mut seed = [0u8; 32];
        let mut z = key;
        for chunk in seed.chunks_mut(8) {
            z = splitmix64(z);
            chunk.copy_from_slice(&z.to_le_bytes());
        }
        RngStream {
            key,
            rng: ChaCha12Rng::from_seed(seed),
        }
    }

    /// Derive an independent substream. The result depends only on this
    /// stream's key and the tags, never on prior draws.
    pub fn child(&self, tags: &[u64]) -> Self {
        let mut key = self.key;
        for &t in tags {
            key = mix(key, t);
        }
        Self::from_key(key)
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    /// Uniform draw in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        // 53 random mantissa bits
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Sample an index proportional to the given nonnegative weights.
    /// Weights need not be normalized; their sum must be positive.
    pub fn sample_index(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        debug_assert!(total > 0.0, "sample_index needs positive total weight");
        let u = self.uniform() * total;
        let mut acc = 0.0;
        for (i, &w) in weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return i;
            }
        }
        // Fall through on rounding; return the last positively weighted index.
        weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
    }

    /// Uniform sample from the probability simplex of the given dimension
    /// (normalized unit-rate exponentials).
    pub fn sample_simplex(&mut self, dim: usize) -> Vec<f64> {
        let mut v: Vec<f64> = (0..dim).map(|_| -(1.0 - self.uniform()).ln()).collect();
        let s: f64 = v.iter().sum();
        for x in &mut v {
            *x /= s;
        }
        v
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }
}
