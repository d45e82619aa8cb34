//! Closed-form selection bounds and a Monte Carlo check of the Gaussian
//! maximal inequality. Logarithms are natural throughout.

use num_traits::Float;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::seed;

fn lit<T: Float>(x: f64) -> T {
    T::from(x).expect("float literal")
}

fn int<T: Float>(x: u64) -> T {
    T::from(x).expect("integer fits the float type")
}

/// `sigma * sqrt(2 ln k)`, a bound on the expected maximum of `k`
/// sigma-sub-Gaussian variables.
pub fn max_subgaussian_bound<T: Float>(k: u64, sigma: T) -> T {
    assert!(k >= 1, "k must be positive");
    sigma * (lit::<T>(2.0) * int::<T>(k).ln()).sqrt()
}

/// Sub-Gaussian parameter of a holdout estimate from `fraction * n` samples:
/// `1 / (2 sqrt(fraction * n))`.
pub fn holdout_sigma<T: Float>(n: u64, fraction: T) -> T {
    (lit::<T>(4.0) * fraction * int::<T>(n)).sqrt().recip()
}

/// Bound on the expected largest estimation error over `k` candidates with
/// the default 1/100 holdout: `5 sqrt(2 ln 2k) / sqrt(n)`.
pub fn eps_bound<T: Float>(n: u64, k: u64) -> T {
    eps_bound_with_fraction(n, k, lit(0.01))
}

/// `sigma * sqrt(2 ln 2k)`; the `2k` counts both signs of each error.
pub fn eps_bound_with_fraction<T: Float>(n: u64, k: u64, fraction: T) -> T {
    assert!(n >= 1 && k >= 1, "n and k must be positive");
    max_subgaussian_bound(2 * k, holdout_sigma(n, fraction))
}

/// [`eps_bound`] with a real-valued candidate count, e.g. `k = ln n`.
pub fn eps_bound_real_k<T: Float>(n: u64, k: T) -> T {
    let sigma = holdout_sigma(n, lit::<T>(0.01));
    sigma * (lit::<T>(2.0) * (lit::<T>(2.0) * k).ln()).sqrt()
}

/// `10 sqrt(2) sqrt((ln ln n + ln 2) / n)`: twice [`eps_bound_real_k`] at
/// `k = ln n`. Requires `n >= 2`.
pub fn lemma1_bound<T: Float>(n: u64) -> Result<T> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("lemma bound needs n >= 2, got {n}")));
    }
    let nf = int::<T>(n);
    let inner = (nf.ln().ln() + lit::<T>(2.0).ln()) / nf;
    Ok(lit::<T>(10.0) * lit::<T>(2.0).sqrt() * inner.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FormulaId {
    /// Integer `k = k(n)` and a configurable holdout fraction.
    EpsMachineCount,
    /// `k = ln n`, default holdout fraction.
    NaturalLogCount,
}

impl FormulaId {
    pub fn as_str(self) -> &'static str {
        match self {
            FormulaId::EpsMachineCount => "eps(n,k)",
            FormulaId::NaturalLogCount => "eps(n,ln n)",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport<T> {
    pub n: u64,
    pub k: u64,
    pub eps_bound: T,
    /// Always `2 * eps_bound`.
    pub regret_bound: T,
    pub formula_id: FormulaId,
}

impl<T: Float> BoundReport<T> {
    pub fn for_machine_count(n: u64, k: u64, fraction: T) -> Self {
        let eps = eps_bound_with_fraction(n, k, fraction);
        BoundReport { n, k, eps_bound: eps, regret_bound: eps + eps, formula_id: FormulaId::EpsMachineCount }
    }

    /// `k` is reported as `floor(ln n)`; the bound itself uses the real value.
    pub fn for_natural_log(n: u64) -> Result<Self> {
        let regret: T = lemma1_bound(n)?;
        let half = regret / lit(2.0);
        let k = int::<T>(n).ln().floor().to_u64().unwrap_or(0);
        Ok(BoundReport { n, k, eps_bound: half, regret_bound: half + half, formula_id: FormulaId::NaturalLogCount })
    }
}

/// How the `k` variables of one Monte Carlo trial are coupled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Coupling {
    Independent,
    /// `X_i = sigma (Z_0 + Z_i) / sqrt 2`: correlated, same marginals.
    SharedNoise,
}

impl Coupling {
    pub fn as_str(self) -> &'static str {
        match self {
            Coupling::Independent => "independent",
            Coupling::SharedNoise => "shared",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxCheck {
    pub k: u64,
    pub sigma: f64,
    pub trials: u64,
    pub coupling: Coupling,
    pub mean: f64,
    pub std_error: f64,
    pub bound: f64,
    pub pass: bool,
}

impl MaxCheck {
    /// `bound + 3 SE - mean`; nonnegative exactly when the check passes.
    pub fn margin(&self) -> f64 {
        self.bound + 3.0 * self.std_error - self.mean
    }
}

/// Trials per independently seeded chunk; results do not depend on the
/// number of worker threads.
const CHUNK: u64 = 1 << 12;

/// Estimates `E[max_i X_i]` for `k` Normal(0, sigma^2) variables and compares
/// it with [`max_subgaussian_bound`]. Passes iff the mean is at most
/// `bound + 3 SE`.
pub fn mc_verify_subgaussian_max(k: u64, sigma: f64, trials: u64, root_seed: u64, coupling: Coupling) -> MaxCheck {
    assert!(k >= 1 && trials >= 1 && sigma > 0.0);
    let chunks = trials.div_ceil(CHUNK);
    let partial: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = seed::rng(root_seed, seed::Stream::MonteCarlo, c);
            let count = CHUNK.min(trials - c * CHUNK);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..count {
                let shared: f64 = match coupling {
                    Coupling::Independent => 0.0,
                    Coupling::SharedNoise => StandardNormal.sample(&mut rng),
                };
                let mut max = f64::NEG_INFINITY;
                for _ in 0..k {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    max = max.max(z);
                }
                let value = match coupling {
                    Coupling::Independent => sigma * max,
                    Coupling::SharedNoise => sigma * (shared + max) * std::f64::consts::FRAC_1_SQRT_2,
                };
                sum += value;
                sum_sq += value * value;
            }
            (sum, sum_sq)
        })
        .collect();
    let (sum, sum_sq) = partial.iter().fold((0.0, 0.0), |(a, b), (s, q)| (a + s, b + q));
    let t = trials as f64;
    let mean = sum / t;
    let var = if trials > 1 { ((sum_sq - t * mean * mean) / (t - 1.0)).max(0.0) } else { 0.0 };
    let std_error = (var / t).sqrt();
    let bound = max_subgaussian_bound(k, sigma);
    MaxCheck { k, sigma, trials, coupling, mean, std_error, bound, pass: mean <= bound + 3.0 * std_error }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn max_bound_values() {
        assert_eq!(max_subgaussian_bound(1, 3.0f64), 0.0);
        assert!(close(max_subgaussian_bound(2, 1.0f64), 1.177_410_022_515_47, 1e-13));
        assert!(close(max_subgaussian_bound(256, 1.0f64), 3.330_218_444_630_79, 1e-13));
        assert!((max_subgaussian_bound(2, 1.0f32) - 1.177_41).abs() < 1e-5);
    }

    #[test]
    fn eps_values() {
        assert!(close(eps_bound::<f64>(10_000, 1), 0.058_870_501_125_773_7, 1e-12));
        assert!(close(eps_bound::<f64>(1024, 10), 0.382_460_442_293_878, 1e-12));
        assert!(close(2.0 * eps_bound::<f64>(10_000, 13), 0.255_268_350_487_148, 1e-12));
        for (n, k) in [(1000u64, 9u64), (77, 3), (1 << 20, 20)] {
            assert!(close(eps_bound::<f64>(4 * n, k), eps_bound::<f64>(n, k) / 2.0, 1e-13));
        }
        let f = eps_bound_with_fraction::<f64>(1000, 5, 0.04);
        assert!(close(f, eps_bound::<f64>(1000, 5) / 2.0, 1e-13));
    }

    #[test]
    fn lemma_values() {
        assert!(close(lemma1_bound::<f64>(1_000_000).unwrap(), 0.025_764_080_014_764_6, 1e-12));
        assert!(close(lemma1_bound::<f64>(100).unwrap(), 2.107_285_840_301_62, 1e-12));
        assert!(close(lemma1_bound::<f64>(1000).unwrap(), 0.724_678_123_648_839, 1e-12));
        assert!(lemma1_bound::<f64>(1).is_err());
        assert!(lemma1_bound::<f64>(2).unwrap() > 0.0);
    }

    #[test]
    fn lemma_identity() {
        for n in [2u64, 3, 10, 100, 12_345, 1 << 30, u64::MAX / 3] {
            let nf = n as f64;
            let alt = 10.0 * (2.0 * (2.0 * nf.ln()).ln()).sqrt() / nf.sqrt();
            assert!(close(lemma1_bound::<f64>(n).unwrap(), alt, 1e-12), "n={n}");
            let half = eps_bound_real_k::<f64>(n, nf.ln());
            assert!(close(lemma1_bound::<f64>(n).unwrap(), 2.0 * half, 1e-12), "n={n}");
        }
    }

    #[test]
    fn reports() {
        let r = BoundReport::<f64>::for_machine_count(10_000, 13, 0.01);
        assert_eq!(r.regret_bound, 2.0 * r.eps_bound);
        let l = BoundReport::<f64>::for_natural_log(100_000).unwrap();
        assert_eq!(l.k, 11);
        assert!(close(l.regret_bound, lemma1_bound(100_000).unwrap(), 1e-15));
        assert_eq!(l.formula_id.as_str(), "eps(n,ln n)");
    }

    #[test]
    fn monte_carlo_small() {
        let one = mc_verify_subgaussian_max(1, 1.0, 20_000, 5, Coupling::Independent);
        assert!(one.pass && one.mean.abs() < 4.0 * one.std_error + 1e-12);
        let two = mc_verify_subgaussian_max(2, 1.0, 100_000, 6, Coupling::Independent);
        assert!(two.pass);
        assert!((two.mean - std::f64::consts::FRAC_2_SQRT_PI / 2.0).abs() < 4.0 * two.std_error);
        let shared = mc_verify_subgaussian_max(16, 2.0, 20_000, 7, Coupling::SharedNoise);
        assert!(shared.pass && shared.margin() > 0.0);
    }

    #[test]
    fn monte_carlo_is_seeded() {
        let a = mc_verify_subgaussian_max(8, 1.0, 10_000, 11, Coupling::Independent);
        let b = mc_verify_subgaussian_max(8, 1.0, 10_000, 11, Coupling::Independent);
        assert_eq!(a, b);
    }
}
