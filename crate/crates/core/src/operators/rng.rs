use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seeded, reproducible random source shared by all operators of a run.
#[derive(Debug, Clone)]
pub struct RandomStream {
    inner: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Uniform integer in `[0, n)`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        self.inner.random_range(0..n)
    }

    /// Uniform integer in `[lo, hi]`.
    pub fn between(&mut self, lo: usize, hi: usize) -> usize {
        self.inner.random_range(lo..=hi)
    }

    /// Uniform real in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// True with probability `p`; `p <= 0` never and `p >= 1` always fires.
    pub fn chance(&mut self, p: f64) -> bool {
        self.unit() < p
    }

    /// Index drawn with probability proportional to `weights`, or `None`
    /// when every weight is zero.
    pub fn weighted(&mut self, weights: &[f64]) -> Option<usize> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return None;
        }
        let mut target = self.unit() * total;
        let mut last_positive = None;
        for (i, &w) in weights.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            if target < w {
                return Some(i);
            }
            target -= w;
            last_positive = Some(i);
        }
        // rounding left a sliver past the end
        last_positive
    }

    /// Weighted draw that falls back to a uniform index when all weights
    /// are zero.
    pub fn weighted_or_uniform(&mut self, weights: &[f64]) -> usize {
        match self.weighted(weights) {
            Some(i) => i,
            None => self.below(weights.len()),
        }
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.inner);
    }

    /// `k` distinct indices from `[0, n)`, uniformly, in draw order.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        rand::seq::index::sample(&mut self.inner, n, k).into_vec()
    }

    /// Seed for an independent child stream; the parent advances by one draw.
    pub fn child_seed(&mut self) -> u64 {
        self.inner.next_u64()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn identical_seeds_identical_draws() {
        let mut a = RandomStream::new(5);
        let mut b = RandomStream::new(5);
        for _ in 0..100 {
            assert_eq!(a.below(1000), b.below(1000));
            assert_eq!(a.unit(), b.unit());
        }
    }

    #[test]
    fn weighted_all_zero_is_none() {
        let mut r = RandomStream::new(1);
        assert_eq!(r.weighted(&[0.0, 0.0]), None);
        assert_eq!(r.weighted(&[0.0, 2.0, 0.0]), Some(1));
    }

    #[test]
    fn weighted_frequencies_pass_chi_square() {
        let weights = [1.0, 2.0, 0.0, 3.0, 4.0];
        let total: f64 = weights.iter().sum();
        let draws = 100_000;
        let mut counts = [0u64; 5];
        let mut r = RandomStream::new(77);
        for _ in 0..draws {
            counts[r.weighted(&weights).unwrap()] += 1;
        }
        assert_eq!(counts[2], 0);
        let stat: f64 = weights
            .iter()
            .zip(&counts)
            .filter(|(w, _)| **w > 0.0)
            .map(|(w, &c)| {
                let e = draws as f64 * w / total;
                (c as f64 - e).powi(2) / e
            })
            .sum();
        let critical = ChiSquared::new(3.0).unwrap().inverse_cdf(0.99);
        assert!(stat < critical, "chi2 {stat} >= {critical}");
    }

    #[test]
    fn sample_indices_are_distinct() {
        let mut r = RandomStream::new(3);
        let mut s = r.sample_indices(50, 20);
        s.sort_unstable();
        s.dedup();
        assert_eq!(s.len(), 20);
    }
}
