//! The batch universal learner and its dovetailed, interruptible variant.
//!
//! Batch: split the samples into a training prefix and a holdout suffix, run
//! candidates `1..=k(n)` on the training part under `T(n)` steps each,
//! estimate each predictor's loss on the holdout, return the argmin.

mod continuous;

pub use continuous::{continuous_learn, ContinuousOutcome, TrajectoryPoint};

use num_rational::Ratio;
use rayon::prelude::*;

use crate::budget::StepBudget;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::registry::{Candidate, Enumeration};
use crate::vm::asm::constant_predictor;
use crate::vm::{
    decode_predictor, execute, serialize_dataset, serialize_point, BitString, DecodeError, Halt, Program, Trap,
};
use crate::Rational;

/// Number of enumerated candidates as a function of the sample count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MachineCount {
    /// `max(1, floor(log2 n))`.
    Log2,
    /// `max(1, floor(log2(max(1, floor(log2 n)))))`, a slower-growing choice.
    LogLog2,
    Fixed(u64),
}

impl MachineCount {
    pub fn eval(self, n: u64) -> u64 {
        match self {
            MachineCount::Log2 => floor_log2(n).max(1),
            MachineCount::LogLog2 => floor_log2(floor_log2(n).max(1)).max(1),
            MachineCount::Fixed(k) => k.max(1),
        }
    }

    /// Least `n >= 1` with `eval(n) >= k`, or `None` if never reached.
    pub fn activation_n(self, k: u64) -> Option<u64> {
        match self {
            MachineCount::Fixed(f) => (f.max(1) >= k).then_some(1),
            _ if k <= 1 => Some(1),
            MachineCount::Log2 => (k < 64).then(|| 1u64 << k),
            MachineCount::LogLog2 => (k < 6).then(|| 1u64 << (1u64 << k)),
        }
    }
}

fn floor_log2(n: u64) -> u64 {
    if n == 0 {
        0
    } else {
        u64::from(63 - n.leading_zeros())
    }
}

#[derive(Debug, Clone)]
pub struct UniversalConfig {
    pub budget: StepBudget,
    pub machine_count: MachineCount,
    /// Fraction of samples held out, in (0, 1).
    pub split_fraction: Ratio<u64>,
    pub enumeration: Enumeration,
}

impl UniversalConfig {
    pub fn new(budget: StepBudget, enumeration: Enumeration) -> Self {
        UniversalConfig {
            budget,
            machine_count: MachineCount::Log2,
            split_fraction: default_split_fraction(),
            enumeration,
        }
    }
}

pub fn default_split_fraction() -> Ratio<u64> {
    Ratio::new(1, 100)
}

/// Holdout size `max(1, round_half_up(fraction * n))`, capped at `n - 1` so
/// the training part is never empty.
pub fn test_size(n: usize, fraction: Ratio<u64>) -> usize {
    let (num, den) = (u128::from(*fraction.numer()), u128::from(*fraction.denom()));
    let rounded = (2 * num * n as u128 + den) / (2 * den);
    (rounded as usize).max(1).min(n.saturating_sub(1).max(1))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSplit {
    pub train: Dataset,
    pub test: Dataset,
}

/// Order-preserving split: the first block trains, the last block tests.
pub fn split_samples(data: &Dataset, fraction: Ratio<u64>) -> Result<SampleSplit> {
    if data.len() < 2 {
        return Err(Error::DatasetTooSmall { needed: 2, got: data.len() });
    }
    if *fraction.numer() == 0 || fraction.numer() >= fraction.denom() {
        return Err(Error::InvalidParameter(format!("split fraction {fraction} must be in (0,1)")));
    }
    let test = test_size(data.len(), fraction);
    let (train, test) = data.split_at(data.len() - test);
    Ok(SampleSplit { train, test })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PredictFailure {
    BudgetExhausted,
    Trapped(Trap),
    /// Halted without emitting exactly one label bit.
    MalformedOutput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Prediction {
    pub label: std::result::Result<bool, PredictFailure>,
    pub steps: u64,
}

/// Reads the label from a finished predictor run.
pub(crate) fn label_from(halted: Halt, output: &BitString) -> std::result::Result<bool, PredictFailure> {
    match halted {
        Halt::RanToCompletion if output.len() == 1 => Ok(output.as_slice()[0]),
        Halt::RanToCompletion => Err(PredictFailure::MalformedOutput),
        Halt::Trapped(t) => Err(PredictFailure::Trapped(t)),
        Halt::BudgetExhausted | Halt::Running => Err(PredictFailure::BudgetExhausted),
    }
}

/// Runs a predictor on one input point under `budget` steps.
pub fn predict(predictor: &Program, x: u64, width: u32, budget: u64) -> Prediction {
    let state = execute(predictor, &serialize_point(x, width), budget);
    Prediction { label: label_from(state.halted, &state.output), steps: state.step_count }
}

/// Holdout error rate together with the interpreter steps it consumed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LossEstimate {
    pub loss: Rational,
    pub steps: u64,
}

/// Fraction of holdout points the predictor gets wrong or fails on. A missing
/// predictor scores 1.
pub fn estimate_loss(predictor: Option<&Program>, holdout: &Dataset, budget: u64) -> Result<LossEstimate> {
    if holdout.is_empty() {
        return Err(Error::DatasetTooSmall { needed: 1, got: 0 });
    }
    let m = holdout.len() as i128;
    let Some(predictor) = predictor else {
        return Ok(LossEstimate { loss: Rational::new_raw(m, m), steps: 0 });
    };
    let mut wrong = 0i128;
    let mut steps = 0u64;
    for s in holdout.iter() {
        let p = predict(predictor, s.x, holdout.width(), budget);
        steps += p.steps;
        if p.label != Ok(s.y) {
            wrong += 1;
        }
    }
    // Keep the holdout size as denominator until the caller reduces.
    Ok(LossEstimate { loss: Rational::new_raw(wrong, m), steps })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearnerFailure {
    BudgetExhausted,
    Trapped(Trap),
    NoPredictor(DecodeError),
}

impl LearnerFailure {
    pub fn label(self) -> &'static str {
        match self {
            LearnerFailure::BudgetExhausted => "budget_exhausted",
            LearnerFailure::Trapped(_) => "trapped",
            LearnerFailure::NoPredictor(_) => "no_predictor",
        }
    }
}

/// One enumerated candidate's result.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateRecord {
    pub index: u64,
    pub name: String,
    pub predictor: std::result::Result<Program, LearnerFailure>,
    /// Holdout estimate with the holdout size as denominator (unreduced).
    pub est_loss: Rational,
    pub learner_steps: u64,
    pub eval_steps: u64,
}

impl CandidateRecord {
    pub fn status(&self) -> &'static str {
        match &self.predictor {
            Ok(_) => "ok",
            Err(f) => f.label(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionReport {
    pub n: usize,
    pub machine_count: u64,
    pub budget: u64,
    pub train_size: usize,
    pub test_size: usize,
    pub records: Vec<CandidateRecord>,
    /// Winning index, `None` when no candidate produced a predictor.
    pub selected: Option<u64>,
    pub fallback: bool,
}

impl SelectionReport {
    pub fn total_steps(&self) -> u64 {
        self.records.iter().map(|r| r.learner_steps + r.eval_steps).sum()
    }

    pub fn learner_steps(&self) -> u64 {
        self.records.iter().map(|r| r.learner_steps).sum()
    }

    pub fn selected_record(&self) -> Option<&CandidateRecord> {
        let index = self.selected?;
        self.records.iter().find(|r| r.index == index)
    }

    /// One line per candidate: index, estimated loss, steps, status.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# n={} k={} budget={} train={} test={}\n# index\tname\test_loss\tlearner_steps\teval_steps\tstatus\n",
            self.n, self.machine_count, self.budget, self.train_size, self.test_size
        );
        for r in &self.records {
            out.push_str(&format!(
                "{}\t{}\t{}/{}\t{}\t{}\t{}\n",
                r.index,
                r.name,
                r.est_loss.numer(),
                r.est_loss.denom(),
                r.learner_steps,
                r.eval_steps,
                r.status()
            ));
        }
        match self.selected {
            Some(i) => out.push_str(&format!("selected\t{i}\n")),
            None => out.push_str("selected\tnone\tfallback=constant-0\n"),
        }
        out
    }
}

/// Runs one candidate on the training split.
pub(crate) fn run_candidate(
    candidate: &Candidate<'_>,
    train: &Dataset,
    train_tape: &BitString,
    budget: u64,
) -> (std::result::Result<Program, LearnerFailure>, u64) {
    match candidate {
        Candidate::Vm { program, .. } => {
            let state = execute(program, train_tape, budget);
            let result = match state.halted {
                Halt::RanToCompletion => decode_predictor(&state.output).map_err(LearnerFailure::NoPredictor),
                Halt::Trapped(t) => Err(LearnerFailure::Trapped(t)),
                Halt::BudgetExhausted | Halt::Running => Err(LearnerFailure::BudgetExhausted),
            };
            (result, state.step_count)
        }
        Candidate::Planted(p) => match p.run(train, budget) {
            Ok(predictor) => (Ok(predictor), p.declared_cost(train.len() as u64)),
            Err(_) => (Err(LearnerFailure::BudgetExhausted), budget),
        },
    }
}

/// Argmin of the holdout estimate over candidates that produced a predictor,
/// ties to the smallest index. Candidates without a predictor score 1 and are
/// never preferred over one that has a predictor.
pub fn select(records: impl IntoIterator<Item = (u64, bool, Rational)>) -> Option<(u64, Rational)> {
    let mut best: Option<(u64, Rational)> = None;
    for (index, has_predictor, loss) in records {
        if !has_predictor {
            continue;
        }
        let better = match &best {
            None => true,
            Some((bi, bl)) => loss < *bl || (loss == *bl && index < *bi),
        };
        if better {
            best = Some((index, loss));
        }
    }
    best
}

/// The batch universal learner. Returns the selected predictor, or the
/// constant-0 predictor with `fallback` set when every candidate failed.
pub fn universal_learn(data: &Dataset, config: &UniversalConfig) -> Result<(Program, SelectionReport)> {
    let split = split_samples(data, config.split_fraction)?;
    let n = data.len() as u64;
    let budget = config.budget.eval(n);
    let k = config.machine_count.eval(n);
    let train_tape = serialize_dataset(&split.train);

    let records: Vec<CandidateRecord> = (1..=k)
        .into_par_iter()
        .map(|index| {
            let candidate = config.enumeration.resolve(index);
            let (predictor, learner_steps) = run_candidate(&candidate, &split.train, &train_tape, budget);
            let estimate = estimate_loss(predictor.as_ref().ok(), &split.test, budget)?;
            Ok(CandidateRecord {
                index,
                name: candidate.name().to_string(),
                predictor,
                est_loss: estimate.loss,
                learner_steps,
                eval_steps: estimate.steps,
            })
        })
        .collect::<Result<_>>()?;

    let selected = select(records.iter().map(|r| (r.index, r.predictor.is_ok(), r.est_loss))).map(|(i, _)| i);
    let predictor = match selected {
        Some(i) => records[(i - 1) as usize].predictor.clone().expect("selected candidates have predictors"),
        None => constant_predictor(false),
    };
    let report = SelectionReport {
        n: data.len(),
        machine_count: k,
        budget,
        train_size: split.train.len(),
        test_size: split.test.len(),
        records,
        selected,
        fallback: selected.is_none(),
    };
    Ok((predictor, report))
}
