use std::collections::HashMap;

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use super::HypergeomError;

/// The one generator used for every random choice in the crate.
///
/// Stream: ChaCha20 keyed by `ChaCha20Rng::seed_from_u64(seed)`. Bounded
/// draws use Lemire's widening-multiply rejection on `next_u64`, so the
/// mapping from seed to output is fixed independently of `rand` helpers.
#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: ChaCha20Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self { inner: ChaCha20Rng::seed_from_u64(seed) }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, bound)`. Panics on `bound == 0`.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let wide = self.next_u64() as u128 * bound as u128;
            if (wide as u64) >= threshold {
                return (wide >> 64) as u64;
            }
        }
    }

    /// Uniform `r`-subset of `[0, universe)`, ascending.
    ///
    /// Partial Fisher–Yates over the implicit array `0..universe`: for
    /// `i in 0..r`, swap slot `i` with slot `i + below(universe - i)`.
    /// Displaced slots live in a sparse map.
    pub fn subset(&mut self, universe: u64, r: u64) -> Result<Vec<u64>, HypergeomError> {
        if r > universe {
            return Err(HypergeomError::SampleTooLarge { r, universe });
        }
        let mut moved: HashMap<u64, u64> = HashMap::new();
        let mut out = Vec::with_capacity(r as usize);
        for i in 0..r {
            let j = i + self.below(universe - i);
            let at_j = *moved.get(&j).unwrap_or(&j);
            let at_i = *moved.get(&i).unwrap_or(&i);
            moved.insert(j, at_i);
            out.push(at_j);
        }
        out.sort_unstable();
        Ok(out)
    }
}

/// Uniform `r`-subset of `[0, universe_size)`, determined by `seed`.
pub fn sample_without_replacement(universe_size: u64, r: u64, seed: u64) -> Result<Vec<u64>, HypergeomError> {
    SeededRng::new(seed).subset(universe_size, r)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-stage seed: `splitmix64(master ^ splitmix64(stage))`.
pub fn stage_seed(master: u64, stage: u64) -> u64 {
    splitmix64(master ^ splitmix64(stage))
}
