//! Deterministic pseudo-randomness for data and workload generation.
//!
//! Every random draw in this crate flows through [`Rng64`], a SplitMix64
//! generator (Steele, Lea & Flood, "Fast splittable pseudorandom number
//! generators"). The algorithm is pinned here rather than taken from a
//! crate so that generated datasets, labels, and queries are byte-identical
//! across platforms, compiler versions, and releases. Reimplementations in
//! other languages can reproduce the streams from this file alone.

/// SplitMix64 pseudorandom generator.
#[derive(Clone, Debug)]
pub struct Rng64 {
    state: u64,
    gauss_spare: Option<f64>,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

impl Rng64 {
    pub fn new(seed: u64) -> Self {
        Rng64 { state: seed, gauss_spare: None }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let limit = u64::MAX - u64::MAX % n;
        loop {
            let v = self.next_u64();
            if v < limit {
                return v % n;
            }
        }
    }

    /// Standard normal via Box-Muller; the spare value is cached.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.gauss_spare.take() {
            return z;
        }
        // u in (0, 1] so ln(u) is finite.
        let u = 1.0 - self.next_f64();
        let v = self.next_f64();
        let r = (-2.0 * u.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * v;
        self.gauss_spare = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Poisson draw (Knuth's method; adequate for small means).
    pub fn poisson(&mut self, lambda: f64) -> u64 {
        assert!(lambda > 0.0 && lambda < 100.0, "poisson mean out of range");
        let limit = (-lambda).exp();
        let mut k = 0u64;
        let mut p = 1.0;
        loop {
            p *= self.next_f64();
            if p <= limit {
                return k;
            }
            k += 1;
        }
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            xs.swap(i, j);
        }
    }

    /// `count` distinct indices from [0, n), ascending.
    pub fn sample_indices(&mut self, n: usize, count: usize) -> Vec<usize> {
        assert!(count <= n);
        if count == n {
            return (0..n).collect();
        }
        // Partial Fisher-Yates over an index map; O(count) memory via hashmap
        // is not worth it at the sizes used here.
        let mut idx: Vec<usize> = (0..n).collect();
        for i in 0..count {
            let j = i + self.below((n - i) as u64) as usize;
            idx.swap(i, j);
        }
        let mut out = idx[..count].to_vec();
        out.sort_unstable();
        out
    }
}

/// Derive an independent stream seed from a base seed and a stream tag.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut r = Rng64::new(seed ^ stream.wrapping_mul(GOLDEN).rotate_left(17));
    r.next_u64()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_stream() {
        let mut a = Rng64::new(7);
        let mut b = Rng64::new(7);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn below_in_range() {
        let mut r = Rng64::new(1);
        for _ in 0..10_000 {
            assert!(r.below(10) < 10);
        }
        assert_eq!(Rng64::new(3).below(1), 0);
    }

    #[test]
    fn normal_moments() {
        let mut r = Rng64::new(11);
        let n = 100_000;
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..n {
            let z = r.normal();
            sum += z;
            sq += z * z;
        }
        let mean = sum / n as f64;
        let var = sq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.03, "var {var}");
    }

    #[test]
    fn poisson_mean() {
        let mut r = Rng64::new(5);
        let n = 50_000;
        let total: u64 = (0..n).map(|_| r.poisson(3.0)).sum();
        let mean = total as f64 / n as f64;
        assert!((mean - 3.0).abs() < 0.05, "mean {mean}");
    }

    #[test]
    fn sample_indices_distinct_sorted() {
        let mut r = Rng64::new(9);
        let s = r.sample_indices(100, 17);
        assert_eq!(s.len(), 17);
        for w in s.windows(2) {
            assert!(w[0] < w[1]);
        }
    }

    #[test]
    fn derive_seed_differs_by_stream() {
        assert_ne!(derive_seed(42, 0), derive_seed(42, 1));
        assert_eq!(derive_seed(42, 3), derive_seed(42, 3));
    }
}
