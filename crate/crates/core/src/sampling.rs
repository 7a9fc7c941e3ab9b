//! Deterministic sampling of small exact coordinates for probe points.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::GaussianRational;

/// Seeded source of small Gaussian rationals. Small numerators and
/// denominators keep the exact arithmetic downstream from blowing up while
/// still avoiding the coordinate hyperplanes most degeneracies live on.
pub struct PointSampler {
    rng: ChaCha8Rng,
}

impl PointSampler {
    pub fn new(seed: u64) -> Self {
        PointSampler { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    fn small_ratio(&mut self) -> (i64, i64) {
        let num = self.rng.gen_range(-3i64..=3);
        let den = self.rng.gen_range(1i64..=3);
        (num, den)
    }

    pub fn gaussian_rational(&mut self) -> GaussianRational {
        let (rn, rd) = self.small_ratio();
        let (in_, id) = self.small_ratio();
        GaussianRational::from_ratio(rn, rd) + GaussianRational::from_ratio_imag(in_, id)
    }

    pub fn gaussian_rationals(&mut self, len: usize) -> Vec<GaussianRational> {
        (0..len).map(|_| self.gaussian_rational()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let a: Vec<_> = PointSampler::new(7).gaussian_rationals(8);
        let b: Vec<_> = PointSampler::new(7).gaussian_rationals(8);
        let c: Vec<_> = PointSampler::new(8).gaussian_rationals(8);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
