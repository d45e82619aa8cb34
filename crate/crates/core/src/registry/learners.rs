//! Built-in native learners. Each compiles its result to a VM predictor.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::dataset::Dataset;
use crate::vm::asm::{constant_predictor, interval_predictor, table_predictor};
use crate::vm::Program;

/// A learner implemented natively rather than as VM code.
pub trait NativeLearner: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    fn train(&self, train: &Dataset) -> Program;
}

/// Widest input for which the memorizer emits a lookup table; wider domains
/// get an interval-list predictor instead.
const TABLE_WIDTH_LIMIT: u32 = 16;

#[derive(Debug, Clone, Copy)]
pub struct ConstantLearner(pub bool);

impl NativeLearner for ConstantLearner {
    fn name(&self) -> &str {
        if self.0 {
            "constant-1"
        } else {
            "constant-0"
        }
    }

    fn train(&self, _train: &Dataset) -> Program {
        constant_predictor(self.0)
    }
}

/// Majority label of the training set, ties to 0.
pub fn majority_label(train: &Dataset) -> bool {
    let ones = train.iter().filter(|s| s.y).count();
    2 * ones > train.len()
}

#[derive(Debug, Clone, Copy)]
pub struct MajorityLearner;

impl NativeLearner for MajorityLearner {
    fn name(&self) -> &str {
        "majority"
    }

    fn train(&self, train: &Dataset) -> Program {
        constant_predictor(majority_label(train))
    }
}

/// Per-input majority vote over the seen inputs, falling back to the global
/// majority label for unseen inputs and for per-input ties.
#[derive(Debug, Clone, Copy)]
pub struct MemorizerLearner;

impl MemorizerLearner {
    /// Label the trained predictor assigns to every seen input that differs
    /// from the default.
    pub fn lookup(train: &Dataset) -> (bool, BTreeMap<u64, bool>) {
        let default = majority_label(train);
        let mut votes: BTreeMap<u64, (u64, u64)> = BTreeMap::new();
        for s in train.iter() {
            let v = votes.entry(s.x).or_default();
            if s.y {
                v.1 += 1;
            } else {
                v.0 += 1;
            }
        }
        let table = votes
            .into_iter()
            .filter_map(|(x, (zeros, ones))| {
                let label = match ones.cmp(&zeros) {
                    std::cmp::Ordering::Greater => true,
                    std::cmp::Ordering::Less => false,
                    std::cmp::Ordering::Equal => default,
                };
                (label != default).then_some((x, label))
            })
            .collect();
        (default, table)
    }
}

impl NativeLearner for MemorizerLearner {
    fn name(&self) -> &str {
        "memorizer"
    }

    fn train(&self, train: &Dataset) -> Program {
        let width = train.width();
        let (default, exceptions) = Self::lookup(train);
        if width <= TABLE_WIDTH_LIMIT {
            let mut table = vec![default; 1usize << width];
            for (&x, &label) in &exceptions {
                table[x as usize] = label;
            }
            table_predictor(width, &table)
        } else {
            let mut boundaries: Vec<u32> = Vec::new();
            for &x in exceptions.keys() {
                let (lo, hi) = (x as u32, x as u32 + 1);
                if boundaries.last() == Some(&lo) {
                    boundaries.pop();
                } else {
                    boundaries.push(lo);
                }
                boundaries.push(hi);
            }
            interval_predictor(width, default, &boundaries, None)
        }
    }
}

/// Empirical risk minimizer over one-sided thresholds `1{x >= t}` and
/// `1{x < t}`.
#[derive(Debug, Clone, Copy)]
pub struct IntervalErmLearner;

/// The threshold rule chosen by [`IntervalErmLearner`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThresholdRule {
    pub threshold: u64,
    /// `true` predicts 1 at and above the threshold.
    pub upper_is_one: bool,
    pub training_errors: u64,
}

impl IntervalErmLearner {
    /// Minimizes training error; ties prefer the upward rule, then the
    /// smaller threshold.
    pub fn fit(train: &Dataset) -> ThresholdRule {
        let mut counts: BTreeMap<u64, (u64, u64)> = BTreeMap::new();
        for s in train.iter() {
            let c = counts.entry(s.x).or_default();
            if s.y {
                c.1 += 1;
            } else {
                c.0 += 1;
            }
        }
        let total_ones: u64 = counts.values().map(|c| c.1).sum();
        let total_zeros: u64 = counts.values().map(|c| c.0).sum();
        // Below the threshold: zeros_below, ones_below.
        let mut zeros_below = 0;
        let mut ones_below = 0;
        let mut best: Option<ThresholdRule> = None;
        let mut consider = |threshold: u64, zeros_below: u64, ones_below: u64| {
            let up = ones_below + (total_zeros - zeros_below);
            let down = zeros_below + (total_ones - ones_below);
            for (upper_is_one, errors) in [(true, up), (false, down)] {
                if best.is_none_or(|b| errors < b.training_errors) {
                    best = Some(ThresholdRule { threshold, upper_is_one, training_errors: errors });
                }
            }
        };
        consider(0, 0, 0);
        for (&x, &(z, o)) in &counts {
            if x > 0 {
                consider(x, zeros_below, ones_below);
            }
            zeros_below += z;
            ones_below += o;
        }
        if let Some((&max_x, _)) = counts.last_key_value() {
            consider(max_x + 1, zeros_below, ones_below);
        }
        best.expect("at least one candidate threshold")
    }
}

impl NativeLearner for IntervalErmLearner {
    fn name(&self) -> &str {
        "interval-erm"
    }

    fn train(&self, train: &Dataset) -> Program {
        let rule = Self::fit(train);
        let width = train.width();
        let below = !rule.upper_is_one;
        if rule.threshold == 0 || rule.threshold >> width != 0 {
            let label = if rule.threshold == 0 { rule.upper_is_one } else { below };
            return constant_predictor(label);
        }
        interval_predictor(width, below, &[rule.threshold as u32], None)
    }
}

/// Built-in learners that need no parameters, by config name.
pub fn builtin(name: &str) -> Option<Arc<dyn NativeLearner>> {
    Some(match name {
        "constant-0" => Arc::new(ConstantLearner(false)),
        "constant-1" => Arc::new(ConstantLearner(true)),
        "majority" => Arc::new(MajorityLearner),
        "memorizer" => Arc::new(MemorizerLearner),
        "interval-erm" => Arc::new(IntervalErmLearner),
        _ => return None,
    })
}

pub const BUILTIN_NAMES: [&str; 5] = ["constant-0", "constant-1", "majority", "memorizer", "interval-erm"];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Sample;
    use crate::vm::{execute, serialize_point, Halt};

    fn label_of(p: &Program, x: u64, width: u32) -> bool {
        let s = execute(p, &serialize_point(x, width), 1_000_000);
        assert_eq!(s.halted, Halt::RanToCompletion);
        assert_eq!(s.output.len(), 1);
        s.output.as_slice()[0]
    }

    #[test]
    fn majority_seven_to_three() {
        let mut samples = vec![Sample::new(1, true); 7];
        samples.extend(vec![Sample::new(1, false); 3]);
        let d = Dataset::new(2, samples);
        assert_eq!(MajorityLearner.train(&d), constant_predictor(true));
    }

    #[test]
    fn memorizer_table_and_interval_forms_agree() {
        let samples = vec![Sample::new(3, true), Sample::new(4, true), Sample::new(9, false), Sample::new(10, true)];
        let narrow = Dataset::new(4, samples.clone());
        let wide = Dataset::new(17, samples);
        let p_narrow = MemorizerLearner.train(&narrow);
        let p_wide = MemorizerLearner.train(&wide);
        for x in 0..16 {
            let expected = x != 9;
            assert_eq!(label_of(&p_narrow, x, 4), expected, "x={x}");
            assert_eq!(label_of(&p_wide, x, 17), expected, "x={x}");
        }
        assert!(label_of(&p_wide, 100_000, 17));
    }

    #[test]
    fn interval_erm_finds_threshold() {
        let samples: Vec<Sample> = (0..64).map(|x| Sample::new(x, x >= 40)).collect();
        let d = Dataset::new(6, samples);
        let rule = IntervalErmLearner::fit(&d);
        assert_eq!(rule, ThresholdRule { threshold: 40, upper_is_one: true, training_errors: 0 });
        let p = IntervalErmLearner.train(&d);
        for x in 0..64 {
            assert_eq!(label_of(&p, x, 6), x >= 40);
        }
    }

    #[test]
    fn interval_erm_downward_and_constant() {
        let samples: Vec<Sample> = (0..16).map(|x| Sample::new(x, x < 5)).collect();
        let d = Dataset::new(4, samples);
        let rule = IntervalErmLearner::fit(&d);
        assert_eq!((rule.threshold, rule.upper_is_one, rule.training_errors), (5, false, 0));
        let ones = Dataset::new(4, vec![Sample::new(2, true), Sample::new(7, true)]);
        assert_eq!(IntervalErmLearner.train(&ones), constant_predictor(true));
    }

    #[test]
    fn interval_erm_matches_brute_force() {
        let samples: Vec<Sample> =
            (0..200u64).map(|i| Sample::new((i * 37) % 32, (i * 11) % 7 < 3 || (i * 37) % 32 > 20)).collect();
        let d = Dataset::new(5, samples);
        let brute = (0..=32u64)
            .flat_map(|t| [true, false].map(|up| (t, up)))
            .map(|(t, up)| d.iter().filter(|s| ((s.x >= t) == up) != s.y).count() as u64)
            .min()
            .unwrap();
        assert_eq!(IntervalErmLearner::fit(&d).training_errors, brute);
    }
}
