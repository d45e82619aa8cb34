//! Finite-support classification distributions with exactly computable loss,
//! and a learner whose learning curve follows a prescribed power law.

use std::fmt;

use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;

use crate::dataset::{width_for_domain, Dataset, Sample};
use crate::error::{Error, Result};
use crate::registry::NativeLearner;
use crate::seed;
use crate::universal::predict;
use crate::vm::asm::{interval_predictor, RankFlip};
use crate::vm::Program;
use crate::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Atom {
    x: u64,
    mass: u64,
    eta: u64,
}

/// Distribution over `(x, y)` with `x` in `0..domain_size` and `y` in {0,1}.
///
/// Masses share one denominator and so do the conditional label
/// probabilities `eta(x) = P(y = 1 | x)`, which keeps every loss an exact
/// integer ratio.
#[derive(Clone, PartialEq, Eq)]
pub struct FiniteDistribution {
    id: String,
    domain_size: u64,
    atoms: Vec<Atom>,
    mass_den: u64,
    eta_den: u64,
    cumulative: Vec<u64>,
}

impl fmt::Debug for FiniteDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FiniteDistribution")
            .field("id", &self.id)
            .field("domain_size", &self.domain_size)
            .field("atoms", &self.atoms.len())
            .finish()
    }
}

fn lcm_checked(a: u64, b: u64) -> Option<u64> {
    (a / a.gcd(&b)).checked_mul(b)
}

fn to_u64_over(r: &Rational, den: u64) -> u64 {
    (r.numer() * (den as i128 / r.denom())) as u64
}

impl FiniteDistribution {
    /// Builds from `(x, mass, eta)` triples. Masses must be positive and sum
    /// to exactly 1; each `x` may appear once and must lie in the domain.
    pub fn new(id: impl Into<String>, domain_size: u64, atoms: Vec<(u64, Rational, Rational)>) -> Result<Self> {
        if domain_size == 0 || domain_size > 1 << 31 {
            return Err(Error::InvalidParameter(format!("domain size {domain_size} must be in 1..=2^31")));
        }
        if atoms.is_empty() {
            return Err(Error::InvalidParameter("distribution has no atoms".into()));
        }
        let mut mass_den = 1u64;
        let mut eta_den = 1u64;
        let mut total = Rational::zero();
        let too_fine = || Error::InvalidParameter("probability denominators too large".into());
        for (x, mass, eta) in &atoms {
            if *x >= domain_size {
                return Err(Error::InvalidParameter(format!("atom {x} outside domain 0..{domain_size}")));
            }
            if *mass <= Rational::zero() {
                return Err(Error::InvalidParameter(format!("atom {x} has nonpositive mass {mass}")));
            }
            if *eta < Rational::zero() || *eta > Rational::from_integer(1) {
                return Err(Error::InvalidParameter(format!("eta({x}) = {eta} outside [0,1]")));
            }
            mass_den = u64::try_from(*mass.denom()).ok().and_then(|d| lcm_checked(mass_den, d)).ok_or_else(too_fine)?;
            eta_den = u64::try_from(*eta.denom()).ok().and_then(|d| lcm_checked(eta_den, d)).ok_or_else(too_fine)?;
            total += mass;
        }
        if total != Rational::from_integer(1) {
            return Err(Error::InvalidParameter(format!("masses sum to {total}, not 1")));
        }
        let mut converted: Vec<Atom> = atoms
            .iter()
            .map(|(x, mass, eta)| Atom { x: *x, mass: to_u64_over(mass, mass_den), eta: to_u64_over(eta, eta_den) })
            .collect();
        converted.sort_by_key(|a| a.x);
        if converted.windows(2).any(|w| w[0].x == w[1].x) {
            return Err(Error::InvalidParameter("duplicate atom".into()));
        }
        let mut acc = 0u64;
        let cumulative = converted
            .iter()
            .map(|a| {
                acc += a.mass;
                acc
            })
            .collect();
        Ok(FiniteDistribution { id: id.into(), domain_size, atoms: converted, mass_den, eta_den, cumulative })
    }

    /// Uniform inputs; `eta0` below `theta`, `1 - eta0` at or above it.
    pub fn threshold(domain_size: u64, theta: u64, eta0: Rational) -> Result<Self> {
        if theta > domain_size {
            return Err(Error::InvalidParameter(format!("theta {theta} exceeds domain size {domain_size}")));
        }
        if eta0 < Rational::zero() || eta0 >= Rational::new(1, 2) {
            return Err(Error::InvalidParameter(format!("eta0 {eta0} must be in [0, 1/2)")));
        }
        let mass = Rational::new(1, domain_size as i128);
        let high = Rational::from_integer(1) - eta0;
        let atoms = (0..domain_size).map(|x| (x, mass, if x < theta { eta0 } else { high })).collect();
        Self::new(format!("threshold({domain_size},{theta},{eta0})"), domain_size, atoms)
    }

    /// Uniform inputs with the same `eta` everywhere.
    pub fn uniform_constant(domain_size: u64, eta: Rational) -> Result<Self> {
        let mass = Rational::new(1, domain_size as i128);
        let atoms = (0..domain_size).map(|x| (x, mass, eta)).collect();
        Self::new(format!("uniform({domain_size},{eta})"), domain_size, atoms)
    }

    pub fn point_mass(domain_size: u64, x: u64, eta: Rational) -> Result<Self> {
        Self::new(format!("point({x},{eta})"), domain_size, vec![(x, Rational::from_integer(1), eta)])
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn domain_size(&self) -> u64 {
        self.domain_size
    }

    pub fn width(&self) -> u32 {
        width_for_domain(self.domain_size)
    }

    pub fn support_len(&self) -> usize {
        self.atoms.len()
    }

    /// `(x, p(x), eta(x))` for every atom, in increasing `x`.
    pub fn support(&self) -> impl Iterator<Item = (u64, Rational, Rational)> + '_ {
        self.atoms.iter().map(move |a| {
            (
                a.x,
                Rational::new(a.mass as i128, self.mass_den as i128),
                Rational::new(a.eta as i128, self.eta_den as i128),
            )
        })
    }

    fn find(&self, x: u64) -> Option<&Atom> {
        self.atoms.binary_search_by_key(&x, |a| a.x).ok().map(|i| &self.atoms[i])
    }

    pub fn mass(&self, x: u64) -> Rational {
        self.find(x).map_or(Rational::zero(), |a| Rational::new(a.mass as i128, self.mass_den as i128))
    }

    pub fn eta(&self, x: u64) -> Rational {
        self.find(x).map_or(Rational::zero(), |a| Rational::new(a.eta as i128, self.eta_den as i128))
    }

    fn loss_den(&self) -> u128 {
        u128::from(self.mass_den) * u128::from(self.eta_den)
    }

    fn ratio(&self, numer: u128) -> Rational {
        Rational::new(numer as i128, self.loss_den() as i128)
    }

    /// Minimum achievable loss, `sum p(x) * min(eta, 1 - eta)`.
    pub fn bayes_loss(&self) -> Rational {
        let total: u128 =
            self.atoms.iter().map(|a| u128::from(a.mass) * u128::from(a.eta.min(self.eta_den - a.eta))).sum();
        self.ratio(total)
    }

    /// Bayes-optimal label, ties to 0.
    pub fn bayes_label(&self, x: u64) -> bool {
        self.find(x).is_some_and(|a| 2 * a.eta > self.eta_den)
    }

    /// `P(y = 1)`.
    pub fn label_marginal(&self) -> Rational {
        self.ratio(self.atoms.iter().map(|a| u128::from(a.mass) * u128::from(a.eta)).sum())
    }

    /// Exact loss of a labeling rule; `None` counts as wrong for either label.
    pub fn loss_of(&self, mut label: impl FnMut(u64) -> Option<bool>) -> Rational {
        let total: u128 = self
            .atoms
            .iter()
            .map(|a| {
                let wrong = match label(a.x) {
                    Some(true) => self.eta_den - a.eta,
                    Some(false) => a.eta,
                    None => self.eta_den,
                };
                u128::from(a.mass) * u128::from(wrong)
            })
            .sum();
        self.ratio(total)
    }

    /// Exact loss of a VM predictor run under `budget` steps per input.
    pub fn true_loss(&self, predictor: &Program, budget: u64) -> Rational {
        let width = self.width();
        self.loss_of(|x| predict(predictor, x, width, budget).label.ok())
    }

    /// `n` i.i.d. draws, determined by `seed`.
    pub fn sample_dataset(&self, n: usize, seed: u64) -> Dataset {
        let mut rng = seed::rng_from(seed);
        let samples = (0..n)
            .map(|_| {
                let u = rng.random_range(0..self.mass_den);
                let i = self.cumulative.partition_point(|&c| c <= u);
                let atom = &self.atoms[i];
                let y = rng.random_range(0..self.eta_den) < atom.eta;
                Sample::new(atom.x, y)
            })
            .collect();
        Dataset::new(self.width(), samples)
    }
}

/// Parameters of a learner whose loss decays like `C * n^-alpha` above the
/// Bayes floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateController {
    pub alpha: f64,
    pub c: f64,
    /// Largest sample size the learner must resolve; the loss granularity is
    /// checked against `C * n_max^-alpha`.
    pub n_max: u64,
    /// The corrupted atoms are those with rank `(multiplier * x + offset) mod
    /// domain_size` below a cutoff.
    pub multiplier: u32,
    pub offset: u32,
}

impl RateController {
    pub fn new(alpha: f64, c: f64, n_max: u64) -> Self {
        RateController { alpha, c, n_max, multiplier: i32::MAX as u32, offset: 12_345 }
    }

    /// Excess loss the learner aims for at sample size `n`.
    pub fn target(&self, n: u64) -> f64 {
        if n == 0 {
            return f64::INFINITY;
        }
        self.c * (n as f64).powf(-self.alpha)
    }
}

/// Bayes predictor with a deterministic set of atoms flipped, sized so the
/// excess loss is as close as possible to `C * n^-alpha`.
#[derive(Debug, Clone)]
pub struct RateLearner {
    controller: RateController,
    width: u32,
    modulus: u32,
    multiplier: u32,
    first_label: bool,
    boundaries: Vec<u32>,
    /// `excess[m]`: numerator of the excess loss from flipping ranks `0..m`.
    excess: Vec<u128>,
    loss_den: u128,
    bayes: Rational,
    max_excess: Rational,
}

fn mod_inverse(a: u64, m: u64) -> Option<u64> {
    let e = (a as i128).extended_gcd(&(m as i128));
    (e.gcd == 1).then(|| e.x.rem_euclid(m as i128) as u64)
}

/// Builds the rate learner for `dist`. Fails when the controller's
/// parameters are out of range or when single atoms are too heavy to
/// resolve the target loss at `n_max`.
pub fn make_rate_learner(controller: RateController, dist: &FiniteDistribution) -> Result<RateLearner> {
    let RateController { alpha, c, n_max, multiplier, offset } = controller;
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(Error::InvalidParameter(format!("alpha {alpha} must be in (0, 1/2]")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("C {c} must be positive")));
    }
    let d = dist.domain_size;
    let modulus = u32::try_from(d)
        .ok()
        .filter(|&m| m <= i32::MAX as u32)
        .ok_or_else(|| Error::InvalidParameter("domain too large for the rank pattern".into()))?;
    if multiplier > i32::MAX as u32 || offset > i32::MAX as u32 {
        return Err(Error::InvalidParameter("rank pattern constants must be below 2^31".into()));
    }
    let inverse = mod_inverse(u64::from(multiplier) % d, d)
        .ok_or_else(|| Error::InvalidParameter(format!("multiplier {multiplier} not invertible mod {d}")))?;

    let mut labels = (0..d).map(|x| dist.bayes_label(x));
    let first_label = labels.next().expect("nonempty domain");
    let mut boundaries = Vec::new();
    let mut prev = first_label;
    for (x, label) in (1..d).zip(labels) {
        if label != prev {
            boundaries.push(x as u32);
            prev = label;
        }
    }

    let mut per_x = vec![0u128; d as usize];
    for a in &dist.atoms {
        per_x[a.x as usize] = u128::from(a.mass) * u128::from(a.eta.abs_diff(dist.eta_den - a.eta));
    }
    let mut excess = Vec::with_capacity(d as usize + 1);
    excess.push(0u128);
    let mut acc = 0u128;
    let mut max_inc = 0u128;
    for rank in 0..d {
        // Rank r belongs to x with (multiplier * x + offset) = r (mod d).
        let x = ((u128::from((rank + d - u64::from(offset) % d) % d) * u128::from(inverse)) % u128::from(d)) as usize;
        acc += per_x[x];
        max_inc = max_inc.max(per_x[x]);
        excess.push(acc);
    }
    let loss_den = dist.loss_den();
    let max_excess = Rational::new(max_inc as i128, loss_den as i128);
    let floor_target = controller.target(n_max);
    if max_excess.to_f64().unwrap_or(f64::INFINITY) > floor_target {
        return Err(Error::Precondition(format!(
            "loss granularity {max_excess} exceeds C*n_max^-alpha = {floor_target:.6}; use a finer support or a smaller n_max"
        )));
    }
    Ok(RateLearner {
        controller,
        width: dist.width(),
        modulus,
        multiplier: multiplier % modulus,
        first_label,
        boundaries,
        excess,
        loss_den,
        bayes: dist.bayes_loss(),
        max_excess,
    })
}

impl RateLearner {
    pub fn controller(&self) -> &RateController {
        &self.controller
    }

    /// Largest loss change caused by flipping one atom.
    pub fn granularity(&self) -> Rational {
        self.max_excess
    }

    /// Number of ranks flipped at sample size `n`. The target is capped at the
    /// largest reachable excess, which is below `1 - bayes` on noisy supports.
    pub fn flip_count(&self, n: u64) -> u32 {
        let den = self.loss_den as f64;
        let headroom = *self.excess.last().expect("nonempty") as f64 / den;
        let target = self.controller.target(n).clamp(0.0, headroom);
        let excess_f = |m: usize| self.excess[m] as f64 / den;
        let hi = self.excess.partition_point(|&e| (e as f64) / den < target).min(self.excess.len() - 1);
        let mut best = hi;
        if hi > 0 {
            // Smallest m achieving the value just below the target.
            let below = excess_f(hi - 1);
            let lo = self.excess.partition_point(|&e| (e as f64) / den < below);
            if (target - below).abs() <= (excess_f(hi) - target).abs() {
                best = lo;
            }
        }
        best as u32
    }

    /// Exact expected loss of the learner's output at sample size `n`.
    pub fn expected_loss(&self, n: u64) -> Rational {
        let m = self.flip_count(n) as usize;
        self.bayes + Rational::new(self.excess[m] as i128, self.loss_den as i128)
    }

    pub fn predictor_for(&self, n: u64) -> Program {
        let flip = RankFlip {
            multiplier: self.multiplier,
            offset: self.controller.offset % self.modulus,
            modulus: self.modulus,
            count: self.flip_count(n),
        };
        interval_predictor(self.width, self.first_label, &self.boundaries, Some(flip))
    }
}

impl NativeLearner for RateLearner {
    fn name(&self) -> &str {
        "rate"
    }

    fn train(&self, train: &Dataset) -> Program {
        self.predictor_for(train.len() as u64)
    }
}
