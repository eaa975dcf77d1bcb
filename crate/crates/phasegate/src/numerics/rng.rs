use num_complex::Complex64;
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{param, Result};

/// Seeded pseudo-random stream.
///
/// The core generator is xoshiro256++ whose 256-bit state is filled from the
/// 64-bit seed by four SplitMix64 steps. Derived draws are defined on top of
/// `next_u64` as follows, so the stream is reproducible from these rules
/// alone:
///
/// * `uniform`: `(next_u64 >> 11) * 2^-53`, in `[0, 1)`.
/// * `gauss`: Box-Muller, `sqrt(-2 ln(1 - u1)) * cos(2 pi u2)`; two uniforms
///   per normal, nothing cached.
/// * `below(n)`: Lemire's multiply-and-reject on 128-bit products.
/// * `choose_k`: partial Fisher-Yates over `0..n`, returned sorted.
/// * `poisson`: inversion by sequential search; exactly one uniform per draw.
/// * `laplace(b)`: inverse CDF, `-b sgn(u - 1/2) ln(1 - 2|u - 1/2|)`.
#[derive(Clone, Debug)]
pub struct Rng {
    seed: u64,
    inner: Xoshiro256PlusPlus,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: Xoshiro256PlusPlus::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn gauss(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Circular complex normal with `E|z|^2 = variance`.
    pub fn complex_gauss(&mut self, variance: f64) -> Complex64 {
        let s = (variance / 2.0).sqrt();
        let re = self.gauss();
        let im = self.gauss();
        Complex64::new(re * s, im * s)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Uniform integer in `0..n`; `n` must be nonzero.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0) is empty");
        let mut m = self.next_u64() as u128 * n as u128;
        if (m as u64) < n {
            let threshold = n.wrapping_neg() % n;
            while (m as u64) < threshold {
                m = self.next_u64() as u128 * n as u128;
            }
        }
        (m >> 64) as u64
    }

    /// `k` distinct indices from `0..n`, uniform over k-subsets, ascending.
    pub fn choose_k(&mut self, n: usize, k: usize) -> Result<Vec<usize>> {
        if k > n {
            return param(format!("cannot choose {k} of {n}"));
        }
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below((n - i) as u64) as usize;
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool.sort_unstable();
        Ok(pool)
    }

    pub fn poisson(&mut self, lambda: f64) -> u64 {
        let u = self.uniform();
        poisson_quantile(lambda, u)
    }

    pub fn laplace(&mut self, scale: f64) -> f64 {
        let u = self.uniform() - 0.5;
        let tail = (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE);
        -scale * u.signum() * tail.ln()
    }
}

/// Smallest `k` with `P(X <= k) > u` for `X ~ Poisson(lambda)`.
///
/// The pmf recurrence runs in log space so large rates do not underflow the
/// starting term into a stuck loop.
pub fn poisson_quantile(lambda: f64, u: f64) -> u64 {
    if !(lambda > 0.0) {
        return 0;
    }
    let cap = (lambda + 40.0 * lambda.sqrt() + 100.0) as u64;
    let ln_lambda = lambda.ln();
    let mut log_p = -lambda;
    let mut cdf = log_p.exp();
    let mut k = 0u64;
    while u >= cdf && k < cap {
        k += 1;
        log_p += ln_lambda - (k as f64).ln();
        cdf += log_p.exp();
    }
    k
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix_finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream seed for item `index` of a run seeded with `base`.
///
/// `splitmix64_finalize(base + (index + 1) * 0x9E3779B97F4A7C15)`, wrapping.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    splitmix_finalize(base.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN)))
}
