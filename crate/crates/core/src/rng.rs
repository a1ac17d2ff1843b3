//! Seeded, platform-independent random numbers.
//!
//! The generator is ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded through
//! `SeedableRng::seed_from_u64`. ChaCha is a counter-based stream cipher:
//! its output is a pure function of (seed, counter) and identical on every
//! platform. A uniform `f64` in `[0,1)` is `(u >> 11)·2^{-53}` for the next
//! 64-bit output `u`, and a coordinate in `[-1,1)` is `2·u01 - 1`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Real;

#[derive(Clone, Debug)]
pub struct SeededRng(ChaCha8Rng);

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Uniform in `[0,1)`.
    pub fn unit(&mut self) -> f64 {
        self.0.gen::<f64>()
    }

    /// Uniform in `[-1,1)`.
    pub fn symmetric<T: Real>(&mut self) -> T {
        T::lit(2.0 * self.unit() - 1.0)
    }

    /// Uniform in `[lo, hi)`.
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    /// A point drawn from `μ^d`.
    pub fn cube_point<T: Real>(&mut self, d: usize) -> Vec<T> {
        (0..d).map(|_| self.symmetric()).collect()
    }

    /// `n` points drawn from `μ^d`.
    pub fn cube_cloud<T: Real>(&mut self, n: usize, d: usize) -> Vec<Vec<T>> {
        (0..n).map(|_| self.cube_point(d)).collect()
    }
}
