//! Learning-curve measurement, power-law fitting and the selection
//! experiments. Every trial draws its data from a seed derived from
//! `(root seed, n, trial)`, so results do not depend on scheduling.

mod experiments;

use std::collections::HashMap;
use std::fmt::Display;
use std::str::FromStr;
use std::sync::Mutex;

pub use experiments::{
    regret_experiment, transient_threshold, universal_trial, RegretRow, RegretTable, TransientReport, TransientRow,
    TrialOutcome,
};

use num_traits::{Float, ToPrimitive};
use rayon::prelude::*;

use crate::budget::StepBudget;
use crate::dataset::Dataset;
use crate::distributions::FiniteDistribution;
use crate::error::{Error, FormatError, Result};
use crate::registry::NativeLearner;
use crate::seed::{self, Stream};
use crate::universal::{universal_learn, UniversalConfig};
use crate::vm::Program;
use crate::Rational;

/// Seed of the dataset for `trial` at sample size `n`.
pub fn trial_seed(root: u64, n: u64, trial: u64) -> u64 {
    seed::child(seed::derive(root, Stream::Dataset, n), trial)
}

/// Memoized exact true loss, keyed by predictor and prediction budget.
pub struct LossCache<'a> {
    dist: &'a FiniteDistribution,
    map: Mutex<HashMap<(Program, u64), Rational>>,
}

impl<'a> LossCache<'a> {
    pub fn new(dist: &'a FiniteDistribution) -> Self {
        LossCache { dist, map: Mutex::new(HashMap::new()) }
    }

    pub fn distribution(&self) -> &'a FiniteDistribution {
        self.dist
    }

    pub fn true_loss(&self, predictor: &Program, budget: u64) -> Rational {
        let key = (predictor.clone(), budget);
        if let Some(loss) = self.map.lock().expect("cache lock").get(&key) {
            return *loss;
        }
        let loss = self.dist.true_loss(predictor, budget);
        self.map.lock().expect("cache lock").insert(key, loss);
        loss
    }

    pub fn len(&self) -> usize {
        self.map.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// What a learning curve measures.
#[derive(Debug, Clone, Copy)]
pub enum CurveLearner<'a> {
    /// Predictions run under the config's budget `T(n)`.
    Universal(&'a UniversalConfig),
    Native {
        learner: &'a dyn NativeLearner,
        predict_budget: &'a StepBudget,
    },
}

impl CurveLearner<'_> {
    pub fn id(&self) -> String {
        match self {
            CurveLearner::Universal(cfg) => format!(
                "universal(mode={},budget={},fraction={})",
                cfg.enumeration.mode().as_str(),
                cfg.budget,
                cfg.split_fraction
            ),
            CurveLearner::Native { learner, .. } => learner.name().to_string(),
        }
    }

    /// Predictor, fallback flag, and the budget its predictions run under.
    fn learn(&self, data: &Dataset) -> Result<(Program, bool, u64)> {
        let n = data.len() as u64;
        match self {
            CurveLearner::Universal(cfg) => {
                let (p, report) = universal_learn(data, cfg)?;
                Ok((p, report.fallback, report.budget))
            }
            CurveLearner::Native { learner, predict_budget } => {
                Ok((learner.train(data), false, predict_budget.eval(n)))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint<T> {
    pub n: u64,
    pub mean_loss: T,
    /// Sample standard deviation over trials divided by `sqrt(trials)`.
    pub std_error: T,
    pub trials: u64,
    /// Trials in which the learner returned its fallback predictor.
    pub fallbacks: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearningCurve<T> {
    pub learner_id: String,
    pub distribution_id: String,
    pub points: Vec<CurvePoint<T>>,
}

fn check_grid(n_grid: &[u64], trials: u64) -> Result<()> {
    if n_grid.is_empty() {
        return Err(Error::InvalidParameter("n grid is empty".into()));
    }
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("n grid must be strictly increasing".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    Ok(())
}

pub(crate) fn to_float<T: Float>(r: Rational) -> T {
    T::from(r.to_f64().expect("finite rational")).expect("representable")
}

/// Mean and standard error of exact per-trial values.
pub(crate) fn mean_and_se<T: Float>(values: &[Rational]) -> (Rational, T) {
    let t = values.len() as i128;
    let mean = values.iter().sum::<Rational>() / Rational::from_integer(t);
    if t < 2 {
        return (mean, T::zero());
    }
    let mean_f: f64 = mean.to_f64().expect("finite");
    let ss: f64 = values.iter().map(|v| (v.to_f64().expect("finite") - mean_f).powi(2)).sum();
    let se = (ss / (t - 1) as f64 / t as f64).sqrt();
    (mean, T::from(se).expect("representable"))
}

/// `G(n)`: mean exact true loss of the learner over `trials` seeded datasets
/// at each `n`.
pub fn learning_curve<T: Float>(
    learner: CurveLearner<'_>,
    dist: &FiniteDistribution,
    n_grid: &[u64],
    trials: u64,
    root_seed: u64,
) -> Result<LearningCurve<T>> {
    check_grid(n_grid, trials)?;
    let cache = LossCache::new(dist);
    let mut points = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let results: Vec<(Rational, bool)> = (0..trials)
            .into_par_iter()
            .map(|trial| {
                let data = dist.sample_dataset(n as usize, trial_seed(root_seed, n, trial));
                let (predictor, fallback, budget) = learner.learn(&data)?;
                Ok((cache.true_loss(&predictor, budget), fallback))
            })
            .collect::<Result<_>>()?;
        let losses: Vec<Rational> = results.iter().map(|(l, _)| *l).collect();
        let (mean, std_error) = mean_and_se::<T>(&losses);
        points.push(CurvePoint {
            n,
            mean_loss: to_float(mean),
            std_error,
            trials,
            fallbacks: results.iter().filter(|(_, f)| *f).count() as u64,
        });
    }
    Ok(LearningCurve { learner_id: learner.id(), distribution_id: dist.id().to_string(), points })
}

/// Exact curve `floor + c * n^-alpha`, for checking the fit.
pub fn synthesize_curve<T: Float>(c: T, alpha: T, floor: T, n_grid: &[u64]) -> LearningCurve<T> {
    let points = n_grid
        .iter()
        .map(|&n| CurvePoint {
            n,
            mean_loss: floor + c * T::from(n).expect("n").powf(-alpha),
            std_error: T::zero(),
            trials: 0,
            fallbacks: 0,
        })
        .collect();
    LearningCurve { learner_id: "synthetic".into(), distribution_id: "none".into(), points }
}

impl<T: Float + Display + FromStr> LearningCurve<T> {
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# learner={}\n# distribution={}\nn,mean_loss,std_error,trials\n",
            self.learner_id, self.distribution_id
        );
        for p in &self.points {
            out.push_str(&format!("{},{},{},{}\n", p.n, p.mean_loss, p.std_error, p.trials));
        }
        out
    }

    /// Reads [`Self::to_csv`] output; other `#` lines are ignored.
    pub fn from_csv(text: &str) -> std::result::Result<Self, FormatError> {
        let mut learner_id = String::new();
        let mut distribution_id = String::new();
        let mut points = Vec::new();
        let mut seen_header = false;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if let Some(comment) = line.strip_prefix('#') {
                let comment = comment.trim();
                if let Some(v) = comment.strip_prefix("learner=") {
                    learner_id = v.to_string();
                } else if let Some(v) = comment.strip_prefix("distribution=") {
                    distribution_id = v.to_string();
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            if !seen_header {
                if line != "n,mean_loss,std_error,trials" {
                    return Err(FormatError::at_line(line_no, format!("expected curve header, found {line:?}")));
                }
                seen_header = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let bad = |what: &str| FormatError::at_line(line_no, format!("bad {what} in {line:?}"));
            if fields.len() != 4 {
                return Err(bad("field count"));
            }
            let point = CurvePoint {
                n: fields[0].parse().map_err(|_| bad("n"))?,
                mean_loss: fields[1].parse().map_err(|_| bad("mean_loss"))?,
                std_error: fields[2].parse().map_err(|_| bad("std_error"))?,
                trials: fields[3].parse().map_err(|_| bad("trials"))?,
                fallbacks: 0,
            };
            if points.last().is_some_and(|p: &CurvePoint<T>| p.n >= point.n) {
                return Err(bad("ordering (n must increase)"));
            }
            points.push(point);
        }
        if !seen_header {
            return Err(FormatError::new("missing curve header"));
        }
        Ok(LearningCurve { learner_id, distribution_id, points })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit<T> {
    pub c: T,
    pub alpha: T,
    /// Smallest and largest `n` among the points used.
    pub fit_window: (u64, u64),
    /// Largest absolute residual in log-log space.
    pub residual: T,
    pub floor: T,
    pub points_used: usize,
}

impl<T: Float + Display> PowerLawFit<T> {
    pub fn to_csv(&self) -> String {
        format!(
            "c,alpha,residual,n_min,n_max,floor,points\n{},{},{},{},{},{},{}\n",
            self.c, self.alpha, self.residual, self.fit_window.0, self.fit_window.1, self.floor, self.points_used
        )
    }
}

/// Least squares of `ln(mean_loss - floor)` on `ln n` over points inside
/// `window` (inclusive) that lie above the floor.
pub fn fit_power_law<T: Float>(
    curve: &LearningCurve<T>,
    floor: T,
    window: Option<(u64, u64)>,
) -> Result<PowerLawFit<T>> {
    let (lo, hi) = window.unwrap_or((0, u64::MAX));
    let usable: Vec<(u64, T, T)> = curve
        .points
        .iter()
        .filter(|p| p.n >= lo && p.n <= hi && p.n > 0 && p.mean_loss > floor)
        .map(|p| (p.n, T::from(p.n).expect("n").ln(), (p.mean_loss - floor).ln()))
        .collect();
    if usable.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "power-law fit needs at least 3 points above the floor, found {}",
            usable.len()
        )));
    }
    let count = T::from(usable.len()).expect("count");
    let mean_x = usable.iter().fold(T::zero(), |a, p| a + p.1) / count;
    let mean_y = usable.iter().fold(T::zero(), |a, p| a + p.2) / count;
    let sxx = usable.iter().fold(T::zero(), |a, p| a + (p.1 - mean_x) * (p.1 - mean_x));
    let sxy = usable.iter().fold(T::zero(), |a, p| a + (p.1 - mean_x) * (p.2 - mean_y));
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let residual = usable.iter().fold(T::zero(), |a, p| a.max((p.2 - (intercept + slope * p.1)).abs()));
    Ok(PowerLawFit {
        c: intercept.exp(),
        alpha: -slope,
        fit_window: (usable[0].0, usable[usable.len() - 1].0),
        residual,
        floor,
        points_used: usable.len(),
    })
}

/// `lo, lo*2, ... ` up to `hi`, or `count` log-spaced integers when `count`
/// is given (deduplicated).
pub fn log_grid(lo: u64, hi: u64, count: Option<usize>) -> Vec<u64> {
    assert!(lo >= 1 && lo <= hi);
    match count {
        None => std::iter::successors(Some(lo), |&n| n.checked_mul(2)).take_while(|&n| n <= hi).collect(),
        Some(c) if c <= 1 => vec![lo],
        Some(c) => {
            let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
            let mut grid: Vec<u64> =
                (0..c).map(|i| (a + (b - a) * i as f64 / (c - 1) as f64).exp().round() as u64).collect();
            grid.dedup();
            grid
        }
    }
}

#[cfg(test)]
mod tests;
