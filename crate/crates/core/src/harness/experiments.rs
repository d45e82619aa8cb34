use num_traits::{Float, Signed, Zero};
use rayon::prelude::*;

use super::{check_grid, mean_and_se, to_float, trial_seed, LossCache};
use crate::bounds::{eps_bound_with_fraction, lemma1_bound};
use crate::distributions::FiniteDistribution;
use crate::error::{Error, Result};
use crate::universal::{universal_learn, UniversalConfig};
use crate::vm::asm::constant_predictor;
use crate::Rational;

/// One run of the universal learner with exact losses for every candidate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialOutcome {
    pub n: u64,
    pub selected: Option<u64>,
    pub selected_loss: Rational,
    /// Exact loss of candidates `1..=k` in order; 1 when no predictor.
    pub candidate_losses: Vec<Rational>,
    pub est_losses: Vec<Rational>,
    /// `max_i |loss_i - est_i|`.
    pub epsilon: Rational,
}

impl TrialOutcome {
    pub fn best_candidate_loss(&self) -> Rational {
        *self.candidate_losses.iter().min().expect("at least one candidate")
    }

    /// Selected loss is within `2 epsilon` of the best candidate.
    pub fn pointwise_holds(&self) -> bool {
        self.selected_loss <= self.best_candidate_loss() + self.epsilon * Rational::from_integer(2)
    }
}

pub fn universal_trial(
    config: &UniversalConfig,
    cache: &LossCache<'_>,
    n: u64,
    data_seed: u64,
) -> Result<TrialOutcome> {
    let data = cache.distribution().sample_dataset(n as usize, data_seed);
    let (predictor, report) = universal_learn(&data, config)?;
    let candidate_losses: Vec<Rational> = report
        .records
        .iter()
        .map(|r| match &r.predictor {
            Ok(p) => cache.true_loss(p, report.budget),
            Err(_) => Rational::from_integer(1),
        })
        .collect();
    let est_losses: Vec<Rational> = report.records.iter().map(|r| r.est_loss).collect();
    let epsilon =
        candidate_losses.iter().zip(&est_losses).map(|(l, e)| (l - e).abs()).max().unwrap_or_else(Rational::zero);
    let selected_loss = match report.selected {
        Some(i) => candidate_losses[(i - 1) as usize],
        None => cache.true_loss(&predictor, report.budget),
    };
    debug_assert!(report.selected.is_some() || predictor == constant_predictor(false));
    Ok(TrialOutcome { n, selected: report.selected, selected_loss, candidate_losses, est_losses, epsilon })
}

fn run_trials(
    config: &UniversalConfig,
    cache: &LossCache<'_>,
    n: u64,
    trials: u64,
    root_seed: u64,
) -> Result<Vec<TrialOutcome>> {
    (0..trials).into_par_iter().map(|t| universal_trial(config, cache, n, trial_seed(root_seed, n, t))).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransientRow {
    pub n: u64,
    pub k: u64,
    pub visible: bool,
    pub selected_count: u64,
    pub trials: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransientReport {
    pub planted_index: u64,
    /// Least `n` with `k(n) >= planted_index`.
    pub activation_n: Option<u64>,
    /// Least tested `n` at which the planted index wins a majority of trials.
    pub observed_switch_n: Option<u64>,
    pub rows: Vec<TransientRow>,
}

impl TransientReport {
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# planted_index={} activation_n={} observed_switch_n={}\nn,k,visible,selected,trials\n",
            self.planted_index,
            self.activation_n.map_or("none".to_string(), |n| n.to_string()),
            self.observed_switch_n.map_or("none".to_string(), |n| n.to_string()),
        );
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{},{}\n", r.n, r.k, r.visible, r.selected_count, r.trials));
        }
        out
    }
}

/// Tracks when the planted index starts being selected. Requires the
/// planted learner to be strictly better, in exact loss, than every other
/// visible candidate in every trial where it is visible.
pub fn transient_threshold(
    config: &UniversalConfig,
    dist: &FiniteDistribution,
    planted_index: u64,
    n_grid: &[u64],
    trials: u64,
    root_seed: u64,
) -> Result<TransientReport> {
    check_grid(n_grid, trials)?;
    if config.enumeration.planting(planted_index).is_none() {
        return Err(Error::InvalidParameter(format!("no learner planted at index {planted_index}")));
    }
    let cache = LossCache::new(dist);
    let mut rows = Vec::new();
    for &n in n_grid {
        let k = config.machine_count.eval(n);
        let visible = k >= planted_index;
        let outcomes = run_trials(config, &cache, n, trials, root_seed)?;
        if visible {
            for (t, o) in outcomes.iter().enumerate() {
                let planted = o.candidate_losses[(planted_index - 1) as usize];
                let rival = o
                    .candidate_losses
                    .iter()
                    .enumerate()
                    .find(|(i, l)| *i as u64 + 1 != planted_index && **l <= planted);
                if let Some((i, l)) = rival {
                    return Err(Error::Precondition(format!(
                        "at n={n}, trial {t}: candidate {} has loss {l}, not worse than the planted loss {planted}",
                        i + 1
                    )));
                }
            }
        }
        let selected_count = outcomes.iter().filter(|o| o.selected == Some(planted_index)).count() as u64;
        rows.push(TransientRow { n, k, visible, selected_count, trials });
    }
    let observed_switch_n = rows.iter().find(|r| 2 * r.selected_count > r.trials).map(|r| r.n);
    Ok(TransientReport {
        planted_index,
        activation_n: config.machine_count.activation_n(planted_index),
        observed_switch_n,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretRow<T> {
    pub n: u64,
    pub k: u64,
    pub trials: u64,
    /// Mean selected loss minus the smallest per-candidate mean loss.
    pub mean_regret: T,
    pub regret_std_error: T,
    pub mean_selected_loss: T,
    pub best_index: u64,
    pub best_mean_loss: T,
    pub mean_epsilon: T,
    pub eps_bound: T,
    /// `2 * eps_bound`.
    pub regret_bound: T,
    pub lemma1_bound: T,
    /// Trials violating `loss(selected) <= min_i loss_i + 2 epsilon`.
    pub pointwise_violations: u64,
    pub pass_eps: bool,
    pub pass_lemma: bool,
    pub pass_mean_epsilon: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretTable<T> {
    pub distribution_id: String,
    pub rows: Vec<RegretRow<T>>,
}

impl<T: Float + std::fmt::Display> RegretTable<T> {
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# distribution={}\nn,k,trials,mean_regret,regret_se,best_index,best_mean_loss,mean_epsilon,eps_bound,regret_bound,lemma1_bound,pointwise_violations,pass_eps,pass_lemma\n",
            self.distribution_id
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.n,
                r.k,
                r.trials,
                r.mean_regret,
                r.regret_std_error,
                r.best_index,
                r.best_mean_loss,
                r.mean_epsilon,
                r.eps_bound,
                r.regret_bound,
                r.lemma1_bound,
                r.pointwise_violations,
                r.pass_eps,
                r.pass_lemma
            ));
        }
        out
    }

    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass_eps && r.pass_lemma && r.pointwise_violations == 0)
    }
}

/// Mean regret of the universal learner against the best candidate in
/// expectation, next to both closed-form bounds.
pub fn regret_experiment<T: Float>(
    config: &UniversalConfig,
    dist: &FiniteDistribution,
    n_grid: &[u64],
    trials: u64,
    root_seed: u64,
) -> Result<RegretTable<T>> {
    check_grid(n_grid, trials)?;
    if n_grid[0] < 2 {
        return Err(Error::DatasetTooSmall { needed: 2, got: n_grid[0] as usize });
    }
    let cache = LossCache::new(dist);
    let fraction = T::from(*config.split_fraction.numer()).expect("numer")
        / T::from(*config.split_fraction.denom()).expect("denom");
    let mut rows = Vec::new();
    for &n in n_grid {
        let k = config.machine_count.eval(n);
        let outcomes = run_trials(config, &cache, n, trials, root_seed)?;
        let t = Rational::from_integer(trials as i128);
        let candidate_means: Vec<Rational> =
            (0..k as usize).map(|i| outcomes.iter().map(|o| o.candidate_losses[i]).sum::<Rational>() / t).collect();
        let (best_pos, best_mean) = candidate_means
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.cmp(b.1).then(a.0.cmp(&b.0)))
            .map(|(i, l)| (i, *l))
            .expect("k >= 1");
        let selected: Vec<Rational> = outcomes.iter().map(|o| o.selected_loss).collect();
        let (mean_selected, _) = mean_and_se::<T>(&selected);
        let regrets: Vec<Rational> = selected.iter().map(|l| l - best_mean).collect();
        let (mean_regret, regret_se) = mean_and_se::<T>(&regrets);
        let epsilons: Vec<Rational> = outcomes.iter().map(|o| o.epsilon).collect();
        let (mean_epsilon, _) = mean_and_se::<T>(&epsilons);
        let eps = eps_bound_with_fraction::<T>(n, k, fraction);
        let lemma: T = lemma1_bound(n)?;
        let mean_regret_f: T = to_float(mean_regret);
        let mean_epsilon_f: T = to_float(mean_epsilon);
        rows.push(RegretRow {
            n,
            k,
            trials,
            mean_regret: mean_regret_f,
            regret_std_error: regret_se,
            mean_selected_loss: to_float(mean_selected),
            best_index: best_pos as u64 + 1,
            best_mean_loss: to_float(best_mean),
            mean_epsilon: mean_epsilon_f,
            eps_bound: eps,
            regret_bound: eps + eps,
            lemma1_bound: lemma,
            pointwise_violations: outcomes.iter().filter(|o| !o.pointwise_holds()).count() as u64,
            pass_eps: mean_regret_f <= eps + eps,
            pass_lemma: mean_regret_f <= lemma,
            pass_mean_epsilon: mean_epsilon_f <= eps,
        });
    }
    Ok(RegretTable { distribution_id: dist.id().to_string(), rows })
}
