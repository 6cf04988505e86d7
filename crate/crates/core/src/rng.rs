//! Deterministic random source.
//!
//! Backed by ChaCha8, whose output stream is specified independently of the
//! host platform, so equal seeds give equal draws everywhere.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seeded, single-owner random source.
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// A source whose seed is derived from `seed` and a path of stream
    /// coordinates, e.g. `(generation, pair, child)`. Distinct paths give
    /// independent streams; the result depends only on the inputs.
    pub fn derive(seed: u64, path: &[u64]) -> Self {
        let mut state = splitmix64(seed ^ 0x6a09_e667_f3bc_c908);
        for &p in path {
            state = splitmix64(state ^ splitmix64(p.wrapping_add(0x9e37_79b9_7f4a_7c15)));
        }
        Self::new(state)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform real on `[lo, hi]`. Always consumes exactly one draw, and
    /// returns `lo` exactly when `lo == hi`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u: f64 = self.rng.gen();
        if lo == hi {
            return lo;
        }
        lo + (hi - lo) * u
    }

    /// Uniform integer on `{lo..=hi}`.
    pub fn uniform_int(&mut self, lo: i64, hi: i64) -> i64 {
        self.rng.gen_range(lo..=hi)
    }

    /// Uniform index on `{0..n}`; `n` must be positive.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        let u: f64 = self.rng.gen();
        u < p
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.rng);
    }

    /// `amount` distinct indices from `0..n`, in random order.
    pub fn sample_indices(&mut self, n: usize, amount: usize) -> Vec<usize> {
        rand::seq::index::sample(&mut self.rng, n, amount).into_vec()
    }

    /// Standard normal draw (Box-Muller, one value per call).
    pub fn normal(&mut self, mean: f64, sd: f64) -> f64 {
        let u1: f64 = 1.0 - self.rng.gen::<f64>();
        let u2: f64 = self.rng.gen();
        let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
        mean + sd * z
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
