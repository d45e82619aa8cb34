//! Experiment configuration: a flat `key = value` file with `[section]`
//! headers. Parsing reports every problem it finds, each with its line.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::Arc;

use num_rational::Ratio;

use crate::budget::{parse_decimal, StepBudget};
use crate::distributions::{make_rate_learner, FiniteDistribution, RateController};
use crate::error::{ConfigErrors, ConfigIssue, Error, Result};
use crate::registry::{builtin, Enumeration, EnumerationMode, PlantedLearner, Planting, BUILTIN_NAMES};
use crate::universal::{default_split_fraction, MachineCount, UniversalConfig};
use crate::vm::fixtures;
use crate::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DistributionSpec {
    Threshold {
        domain_size: u64,
        theta: u64,
        eta0: Ratio<u64>,
    },
    /// Uniform inputs with a constant `eta`.
    Uniform {
        domain_size: u64,
        eta: Ratio<u64>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlantingSpec {
    Native {
        name: String,
        index: u64,
        cost: StepBudget,
    },
    /// A fixture VM program, charged real steps.
    Bytecode {
        fixture: String,
        index: u64,
    },
    /// The rate learner described by the `[rate]` section.
    Rate {
        index: u64,
        cost: StepBudget,
    },
}

impl PlantingSpec {
    pub fn index(&self) -> u64 {
        match self {
            PlantingSpec::Native { index, .. }
            | PlantingSpec::Bytecode { index, .. }
            | PlantingSpec::Rate { index, .. } => *index,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub distribution: DistributionSpec,
    pub mode: EnumerationMode,
    pub plantings: Vec<PlantingSpec>,
    pub budget: StepBudget,
    pub machine_count: MachineCount,
    pub split_fraction: Ratio<u64>,
    pub rate: Option<RateController>,
    pub n_grid: Vec<u64>,
    pub trials: u64,
    pub seed: u64,
    pub output_dir: String,
    pub fit_window: Option<(u64, u64)>,
    /// Floor subtracted before fitting; the Bayes loss when absent.
    pub floor: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            distribution: DistributionSpec::Threshold { domain_size: 256, theta: 128, eta0: Ratio::from_integer(0) },
            mode: EnumerationMode::PureVm,
            plantings: Vec::new(),
            budget: StepBudget::new(Ratio::from_integer(1), 2, 0),
            machine_count: MachineCount::Log2,
            split_fraction: default_split_fraction(),
            rate: None,
            n_grid: vec![1000],
            trials: 100,
            seed: 0,
            output_dir: "out".into(),
            fit_window: None,
            floor: None,
        }
    }
}

/// Everything needed to run an experiment, built from a config.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub distribution: FiniteDistribution,
    pub universal: UniversalConfig,
}

fn parse_ratio(s: &str) -> Option<Ratio<u64>> {
    match s.split_once('/') {
        Some((a, b)) => {
            let (a, b): (u64, u64) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
            (b != 0).then(|| Ratio::new(a, b))
        }
        None => parse_decimal(s),
    }
}

fn ratio_text(r: &Ratio<u64>) -> String {
    r.to_string()
}

fn to_rational(r: Ratio<u64>) -> Rational {
    Rational::new(i128::from(*r.numer()), i128::from(*r.denom()))
}

fn list(s: &str) -> Vec<&str> {
    s.split(',').map(str::trim).collect()
}

struct Parser {
    issues: Vec<ConfigIssue>,
}

impl Parser {
    fn issue(&mut self, line: usize, field: &str, message: impl Into<String>) {
        self.issues.push(ConfigIssue { line: Some(line), field: field.to_string(), message: message.into() });
    }

    fn num<T: std::str::FromStr>(&mut self, line: usize, field: &str, value: &str) -> Option<T> {
        let parsed = value.parse().ok();
        if parsed.is_none() {
            self.issue(line, field, format!("expected a number, found {value:?}"));
        }
        parsed
    }

    fn ratio(&mut self, line: usize, field: &str, value: &str) -> Option<Ratio<u64>> {
        let parsed = parse_ratio(value);
        if parsed.is_none() {
            self.issue(line, field, format!("expected a fraction like 1/10 or 0.1, found {value:?}"));
        }
        parsed
    }

    fn real(&mut self, line: usize, field: &str, value: &str) -> Option<f64> {
        match value.parse::<f64>() {
            Ok(v) if v.is_finite() => Some(v),
            _ => {
                self.issue(line, field, format!("expected a real number, found {value:?}"));
                None
            }
        }
    }

    fn budget(&mut self, line: usize, field: &str, value: &str) -> Option<StepBudget> {
        match value.parse() {
            Ok(b) => Some(b),
            Err(e) => {
                self.issue(line, field, format!("malformed budget expression: {e}"));
                None
            }
        }
    }
}

const KEYS: [(&str, &[&str]); 5] = [
    ("distribution", &["type", "domain_size", "theta", "eta0", "eta"]),
    ("enumeration", &["mode", "plant", "bytecode", "rate"]),
    ("learner", &["budget", "machine_count", "split_fraction"]),
    ("rate", &["alpha", "c", "n_max", "multiplier", "offset"]),
    ("experiment", &["n_grid", "trials", "seed", "output_dir", "fit_window", "floor"]),
];

const REPEATABLE: [&str; 3] = ["plant", "bytecode", "rate"];

#[derive(Default)]
struct RateFields {
    alpha: Option<f64>,
    c: Option<f64>,
    n_max: Option<u64>,
    multiplier: Option<u32>,
    offset: Option<u32>,
}

/// Parses and validates a config. Missing keys take their defaults.
pub fn parse_config(text: &str) -> std::result::Result<ExperimentConfig, ConfigErrors> {
    let mut p = Parser { issues: Vec::new() };
    let mut cfg = ExperimentConfig::default();
    let mut section: Option<&str> = None;
    let mut seen: BTreeSet<String> = BTreeSet::new();

    let mut dist_type: Option<(usize, String)> = None;
    let mut domain_size = None;
    let mut theta = None;
    let mut eta0 = None;
    let mut eta = None;
    let mut rate_fields = RateFields::default();
    let mut rate_line = None;
    let mut planting_lines: Vec<(usize, PlantingSpec)> = Vec::new();
    let mut mode_line = None;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim();
            match KEYS.iter().find(|(s, _)| *s == name) {
                Some((s, _)) => section = Some(s),
                None => {
                    p.issue(line, name, "unknown section");
                    section = None;
                }
            }
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            p.issue(line, content, "expected `key = value`");
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        let Some(sec) = section else {
            p.issue(line, key, "key outside a known section");
            continue;
        };
        let field = format!("{sec}.{key}");
        if !KEYS.iter().any(|(s, keys)| *s == sec && keys.contains(&key)) {
            p.issue(line, &field, "unknown key");
            continue;
        }
        if !REPEATABLE.contains(&key) && !seen.insert(field.clone()) {
            p.issue(line, &field, "duplicate key");
            continue;
        }
        match (sec, key) {
            ("distribution", "type") => dist_type = Some((line, value.to_string())),
            ("distribution", "domain_size") => domain_size = p.num::<u64>(line, &field, value).map(|v| (line, v)),
            ("distribution", "theta") => theta = p.num::<u64>(line, &field, value).map(|v| (line, v)),
            ("distribution", "eta0") => eta0 = p.ratio(line, &field, value).map(|v| (line, v)),
            ("distribution", "eta") => eta = p.ratio(line, &field, value).map(|v| (line, v)),
            ("enumeration", "mode") => {
                mode_line = Some(line);
                match value {
                    "pure" => cfg.mode = EnumerationMode::PureVm,
                    "hybrid" => cfg.mode = EnumerationMode::Hybrid,
                    _ => p.issue(line, &field, format!("expected pure or hybrid, found {value:?}")),
                }
            }
            ("enumeration", "plant") => match list(value).as_slice() {
                [name, index, cost] => {
                    if !BUILTIN_NAMES.contains(name) {
                        p.issue(
                            line,
                            &field,
                            format!("unknown learner {name:?} (known: {})", BUILTIN_NAMES.join(", ")),
                        );
                    }
                    let index = p.num::<u64>(line, &field, index);
                    let cost = p.budget(line, &field, cost);
                    if let (Some(index), Some(cost)) = (index, cost) {
                        planting_lines.push((line, PlantingSpec::Native { name: name.to_string(), index, cost }));
                    }
                }
                _ => p.issue(line, &field, "expected `name, index, cost`"),
            },
            ("enumeration", "bytecode") => match list(value).as_slice() {
                [fixture, index] => {
                    if fixtures::by_name(fixture).is_none() {
                        let known: Vec<&str> = fixtures::ALL.iter().map(|(n, _)| *n).collect();
                        p.issue(line, &field, format!("unknown fixture {fixture:?} (known: {})", known.join(", ")));
                    }
                    if let Some(index) = p.num::<u64>(line, &field, index) {
                        planting_lines.push((line, PlantingSpec::Bytecode { fixture: fixture.to_string(), index }));
                    }
                }
                _ => p.issue(line, &field, "expected `fixture, index`"),
            },
            ("enumeration", "rate") => match list(value).as_slice() {
                [index, cost] => {
                    let index = p.num::<u64>(line, &field, index);
                    let cost = p.budget(line, &field, cost);
                    if let (Some(index), Some(cost)) = (index, cost) {
                        planting_lines.push((line, PlantingSpec::Rate { index, cost }));
                    }
                }
                _ => p.issue(line, &field, "expected `index, cost`"),
            },
            ("learner", "budget") => {
                if let Some(b) = p.budget(line, &field, value) {
                    cfg.budget = b;
                }
            }
            ("learner", "machine_count") => match value {
                "log2" => cfg.machine_count = MachineCount::Log2,
                "loglog2" => cfg.machine_count = MachineCount::LogLog2,
                _ => match value.strip_prefix("fixed:").map(|k| k.trim().parse::<u64>()) {
                    Some(Ok(k)) if k >= 1 => cfg.machine_count = MachineCount::Fixed(k),
                    _ => p.issue(line, &field, format!("expected log2, loglog2 or fixed:K, found {value:?}")),
                },
            },
            ("learner", "split_fraction") => {
                if let Some(f) = p.ratio(line, &field, value) {
                    if *f.numer() == 0 || f.numer() >= f.denom() {
                        p.issue(line, &field, "fraction must be in (0,1)");
                    } else {
                        cfg.split_fraction = f;
                    }
                }
            }
            ("rate", _) => {
                rate_line.get_or_insert(line);
                match key {
                    "alpha" => rate_fields.alpha = p.real(line, &field, value),
                    "c" => rate_fields.c = p.real(line, &field, value),
                    "n_max" => rate_fields.n_max = p.num(line, &field, value),
                    "multiplier" => rate_fields.multiplier = p.num(line, &field, value),
                    _ => rate_fields.offset = p.num(line, &field, value),
                }
            }
            ("experiment", "n_grid") => {
                let items = list(value);
                let grid: Vec<Option<u64>> = items.iter().map(|v| v.parse::<u64>().ok()).collect();
                if grid.iter().any(Option::is_none) || grid.is_empty() {
                    p.issue(line, &field, format!("expected a comma-separated list of integers, found {value:?}"));
                } else {
                    let grid: Vec<u64> = grid.into_iter().flatten().collect();
                    if grid.windows(2).any(|w| w[0] >= w[1]) {
                        p.issue(line, &field, "values must be strictly increasing");
                    } else if grid[0] < 2 {
                        p.issue(line, &field, "sample sizes must be at least 2");
                    } else {
                        cfg.n_grid = grid;
                    }
                }
            }
            ("experiment", "trials") => {
                if let Some(t) = p.num::<u64>(line, &field, value) {
                    if t == 0 {
                        p.issue(line, &field, "trials must be at least 1");
                    } else {
                        cfg.trials = t;
                    }
                }
            }
            ("experiment", "seed") => {
                if let Some(s) = p.num(line, &field, value) {
                    cfg.seed = s;
                }
            }
            ("experiment", "output_dir") => {
                if value.is_empty() {
                    p.issue(line, &field, "empty path");
                } else {
                    cfg.output_dir = value.to_string();
                }
            }
            ("experiment", "fit_window") => match list(value).as_slice() {
                [lo, hi] => {
                    let lo = p.num::<u64>(line, &field, lo);
                    let hi = p.num::<u64>(line, &field, hi);
                    match (lo, hi) {
                        (Some(lo), Some(hi)) if lo <= hi => cfg.fit_window = Some((lo, hi)),
                        (Some(_), Some(_)) => p.issue(line, &field, "window start exceeds its end"),
                        _ => {}
                    }
                }
                _ => p.issue(line, &field, "expected `n_min, n_max`"),
            },
            ("experiment", "floor") => {
                if let Some(f) = p.real(line, &field, value) {
                    if !(0.0..1.0).contains(&f) {
                        p.issue(line, &field, "floor must be in [0,1)");
                    } else {
                        cfg.floor = Some(f);
                    }
                }
            }
            _ => unreachable!("keys checked against KEYS"),
        }
    }

    // Distribution.
    let (type_line, kind) = dist_type.unwrap_or((0, "threshold".to_string()));
    let size = domain_size.map_or(256, |(_, v)| v);
    let size_line = domain_size.map_or(type_line, |(l, _)| l);
    if size == 0 || size > 1 << 31 {
        p.issue(size_line, "distribution.domain_size", "must be in 1..=2^31");
    }
    match kind.as_str() {
        "threshold" => {
            if let Some((l, _)) = eta {
                p.issue(l, "distribution.eta", "not a threshold parameter (use eta0)");
            }
            let theta_v = theta.map_or(size / 2, |(_, v)| v);
            if theta_v > size {
                p.issue(theta.map_or(type_line, |(l, _)| l), "distribution.theta", "must not exceed domain_size");
            }
            let eta0_v = eta0.map_or(Ratio::from_integer(0), |(_, v)| v);
            if eta0_v >= Ratio::new(1, 2) {
                p.issue(eta0.map_or(type_line, |(l, _)| l), "distribution.eta0", "must be in [0, 1/2)");
            }
            cfg.distribution = DistributionSpec::Threshold { domain_size: size, theta: theta_v, eta0: eta0_v };
        }
        "uniform" => {
            for (name, v) in [("theta", theta.map(|(l, _)| l)), ("eta0", eta0.map(|(l, _)| l))] {
                if let Some(l) = v {
                    p.issue(l, &format!("distribution.{name}"), "not a uniform parameter");
                }
            }
            let eta_v = eta.map_or(Ratio::from_integer(0), |(_, v)| v);
            if eta_v > Ratio::from_integer(1) {
                p.issue(eta.map_or(type_line, |(l, _)| l), "distribution.eta", "must be in [0,1]");
            }
            cfg.distribution = DistributionSpec::Uniform { domain_size: size, eta: eta_v };
        }
        other => p.issue(type_line, "distribution.type", format!("expected threshold or uniform, found {other:?}")),
    }

    // Rate controller.
    if let Some(line) = rate_line {
        let RateFields { alpha, c, n_max, multiplier, offset } = rate_fields;
        let defaults = RateController::new(0.3, 1.0, 1);
        match (alpha, c, n_max) {
            (Some(alpha), Some(c), Some(n_max)) => {
                if !(alpha > 0.0 && alpha <= 0.5) {
                    p.issue(line, "rate.alpha", "must be in (0, 1/2]");
                }
                if c <= 0.0 {
                    p.issue(line, "rate.c", "must be positive");
                }
                cfg.rate = Some(RateController {
                    alpha,
                    c,
                    n_max,
                    multiplier: multiplier.unwrap_or(defaults.multiplier),
                    offset: offset.unwrap_or(defaults.offset),
                });
            }
            _ => p.issue(line, "rate", "alpha, c and n_max are required"),
        }
    }

    // Plantings.
    let mut indices = BTreeSet::new();
    for (line, spec) in &planting_lines {
        let index = spec.index();
        if index == 0 {
            p.issue(*line, "enumeration", "planting index must be at least 1");
        } else if !indices.insert(index) {
            p.issue(*line, "enumeration", format!("index {index} planted twice"));
        }
        if matches!(spec, PlantingSpec::Rate { .. }) && rate_line.is_none() {
            p.issue(*line, "enumeration.rate", "rate planting needs a [rate] section");
        }
    }
    if !planting_lines.is_empty() && cfg.mode == EnumerationMode::PureVm {
        p.issue(mode_line.unwrap_or(planting_lines[0].0), "enumeration.mode", "plantings require mode = hybrid");
    }
    cfg.plantings = planting_lines.into_iter().map(|(_, s)| s).collect();

    if p.issues.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigErrors(p.issues))
    }
}

impl ExperimentConfig {
    /// Canonical text; [`parse_config`] maps it back to an equal config.
    pub fn to_text(&self) -> String {
        let mut out = String::from("[distribution]\n");
        match &self.distribution {
            DistributionSpec::Threshold { domain_size, theta, eta0 } => {
                let _ = write!(
                    out,
                    "type = threshold\ndomain_size = {domain_size}\ntheta = {theta}\neta0 = {}\n",
                    ratio_text(eta0)
                );
            }
            DistributionSpec::Uniform { domain_size, eta } => {
                let _ = write!(out, "type = uniform\ndomain_size = {domain_size}\neta = {}\n", ratio_text(eta));
            }
        }
        let _ = write!(out, "\n[enumeration]\nmode = {}\n", self.mode.as_str());
        for spec in &self.plantings {
            match spec {
                PlantingSpec::Native { name, index, cost } => {
                    let _ = writeln!(out, "plant = {name}, {index}, {cost}");
                }
                PlantingSpec::Bytecode { fixture, index } => {
                    let _ = writeln!(out, "bytecode = {fixture}, {index}");
                }
                PlantingSpec::Rate { index, cost } => {
                    let _ = writeln!(out, "rate = {index}, {cost}");
                }
            }
        }
        let machine_count = match self.machine_count {
            MachineCount::Log2 => "log2".to_string(),
            MachineCount::LogLog2 => "loglog2".to_string(),
            MachineCount::Fixed(k) => format!("fixed:{k}"),
        };
        let _ = write!(
            out,
            "\n[learner]\nbudget = {}\nmachine_count = {machine_count}\nsplit_fraction = {}\n",
            self.budget,
            ratio_text(&self.split_fraction)
        );
        if let Some(r) = &self.rate {
            let _ = write!(
                out,
                "\n[rate]\nalpha = {}\nc = {}\nn_max = {}\nmultiplier = {}\noffset = {}\n",
                r.alpha, r.c, r.n_max, r.multiplier, r.offset
            );
        }
        let grid: Vec<String> = self.n_grid.iter().map(u64::to_string).collect();
        let _ = write!(
            out,
            "\n[experiment]\nn_grid = {}\ntrials = {}\nseed = {}\noutput_dir = {}\n",
            grid.join(", "),
            self.trials,
            self.seed,
            self.output_dir
        );
        if let Some((lo, hi)) = self.fit_window {
            let _ = writeln!(out, "fit_window = {lo}, {hi}");
        }
        if let Some(f) = self.floor {
            let _ = writeln!(out, "floor = {f}");
        }
        out
    }

    pub fn build_distribution(&self) -> Result<FiniteDistribution> {
        match &self.distribution {
            DistributionSpec::Threshold { domain_size, theta, eta0 } => {
                FiniteDistribution::threshold(*domain_size, *theta, to_rational(*eta0))
            }
            DistributionSpec::Uniform { domain_size, eta } => {
                FiniteDistribution::uniform_constant(*domain_size, to_rational(*eta))
            }
        }
    }

    /// Builds the distribution and the learner. Fails when a rate planting's
    /// granularity precondition does not hold.
    pub fn resolve(&self) -> Result<Resolved> {
        let distribution = self.build_distribution()?;
        let mut plantings = Vec::with_capacity(self.plantings.len());
        for spec in &self.plantings {
            plantings.push(match spec {
                PlantingSpec::Native { name, index, cost } => {
                    let learner =
                        builtin(name).ok_or_else(|| Error::InvalidParameter(format!("unknown learner {name}")))?;
                    Planting::Native(PlantedLearner::new(name.clone(), learner, cost.clone(), *index))
                }
                PlantingSpec::Bytecode { fixture, index } => Planting::Bytecode {
                    name: fixture.clone(),
                    index: *index,
                    program: fixtures::by_name(fixture)
                        .ok_or_else(|| Error::InvalidParameter(format!("unknown fixture {fixture}")))?,
                },
                PlantingSpec::Rate { index, cost } => {
                    let controller =
                        self.rate.ok_or_else(|| Error::InvalidParameter("rate planting without [rate]".into()))?;
                    let learner = make_rate_learner(controller, &distribution)?;
                    Planting::Native(PlantedLearner::new("rate", Arc::new(learner), cost.clone(), *index))
                }
            });
        }
        let enumeration = match self.mode {
            EnumerationMode::PureVm => Enumeration::pure(),
            EnumerationMode::Hybrid => Enumeration::hybrid(plantings)?,
        };
        let universal = UniversalConfig {
            budget: self.budget.clone(),
            machine_count: self.machine_count,
            split_fraction: self.split_fraction,
            enumeration,
        };
        Ok(Resolved { distribution, universal })
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn issues(text: &str) -> Vec<ConfigIssue> {
        parse_config(text).unwrap_err().0
    }

    #[test]
    fn empty_config_takes_defaults() {
        assert_eq!(parse_config("").unwrap(), ExperimentConfig::default());
        assert_eq!(parse_config("# only a comment\n\n").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn budget_expression() {
        let cfg = parse_config("[learner]\nbudget = 2*n^2\n").unwrap();
        assert_eq!(cfg.budget, StepBudget::new(Ratio::from_integer(2), 2, 0));
    }

    #[test]
    fn fraction_out_of_range() {
        let found = issues("[learner]\nsplit_fraction = 1.5\n");
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].message, "fraction must be in (0,1)");
        assert_eq!(found[0].line, Some(2));
        assert_eq!(found[0].field, "learner.split_fraction");
    }

    #[test]
    fn all_errors_reported() {
        let text = "[learner]\nbudget = n^^2\nbogus = 1\n[nowhere]\n[experiment]\ntrials = 0\nn_grid = 10, 5\n[enumeration]\nplant = wizard, 0, n\n";
        let found = issues(text);
        let lines: Vec<Option<usize>> = found.iter().map(|i| i.line).collect();
        assert!(found.len() >= 7, "{found:?}");
        for line in [2, 3, 4, 6, 7, 9] {
            assert!(lines.contains(&Some(line)), "no issue on line {line}: {found:?}");
        }
        assert!(found.iter().any(|i| i.message.contains("mode = hybrid")));
    }

    #[test]
    fn duplicates_and_rate_requirements() {
        let text = "[enumeration]\nmode = hybrid\nplant = majority, 2, n\nbytecode = looping-learner, 2\nrate = 3, n\n[learner]\nbudget = n\nbudget = n\n";
        let found = issues(text);
        assert!(found.iter().any(|i| i.message == "index 2 planted twice" && i.line == Some(4)));
        assert!(found.iter().any(|i| i.message.contains("[rate]")));
        assert!(found.iter().any(|i| i.message == "duplicate key" && i.line == Some(8)));
    }

    #[test]
    fn resolves_acceptance_style_config() {
        let text = "\
[distribution]
type = threshold
domain_size = 256
theta = 128
eta0 = 1/10

[enumeration]
mode = hybrid
plant = constant-0, 1, 1
plant = majority, 3, n + 1
bytecode = constant-1-learner, 2

[learner]
budget = n^2 + 1000
";
        let cfg = parse_config(text).unwrap();
        let resolved = cfg.resolve().unwrap();
        assert_eq!(resolved.distribution.id(), "threshold(256,128,1/10)");
        assert_eq!(resolved.universal.enumeration.plantings().count(), 3);
        assert_eq!(parse_config(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn rate_planting_resolves_and_checks_granularity() {
        let text = "[distribution]\ndomain_size = 64\n[enumeration]\nmode = hybrid\nrate = 4, n\n[rate]\nalpha = 0.3\nc = 1\nn_max = 16777216\n";
        let cfg = parse_config(text).unwrap();
        assert!(matches!(cfg.resolve(), Err(Error::Precondition(_))));
        let fine = parse_config(&text.replace("16777216", "1000")).unwrap();
        assert!(fine.resolve().is_ok());
    }

    fn any_config() -> impl Strategy<Value = ExperimentConfig> {
        let dist = prop_oneof![
            (1u64..1000, 0u64..1000, 0u64..50).prop_map(|(d, t, e)| DistributionSpec::Threshold {
                domain_size: d.max(t),
                theta: t,
                eta0: Ratio::new(e, 100),
            }),
            (1u64..1000, 0u64..=8)
                .prop_map(|(d, e)| DistributionSpec::Uniform { domain_size: d, eta: Ratio::new(e, 8) }),
        ];
        let planting = (0usize..3, 1u64..100, 0u64..5, 0u64..100).prop_map(|(kind, index, c, b)| {
            let cost = StepBudget::linear(c, b);
            match kind {
                0 => PlantingSpec::Native { name: BUILTIN_NAMES[index as usize % 5].to_string(), index, cost },
                1 => PlantingSpec::Bytecode { fixture: fixtures::ALL[index as usize % 7].0.to_string(), index },
                _ => PlantingSpec::Rate { index, cost },
            }
        });
        let plantings = prop::collection::vec(planting, 0..5).prop_map(|v| {
            let mut seen = BTreeSet::new();
            v.into_iter().filter(|s| seen.insert(s.index())).collect::<Vec<_>>()
        });
        let grid = prop::collection::btree_set(2u64..1_000_000, 1..6).prop_map(|s| s.into_iter().collect::<Vec<_>>());
        (
            dist,
            plantings,
            (1u64..5, 0u32..4, 0u64..10_000),
            prop_oneof![
                Just(MachineCount::Log2),
                Just(MachineCount::LogLog2),
                (1u64..50).prop_map(MachineCount::Fixed)
            ],
            (1u64..99).prop_map(|p| Ratio::new(p, 100)),
            (grid, 1u64..1000, any::<u64>()),
            (prop::option::of((1u64..100, 100u64..1000)), prop::option::of(0.0f64..0.9), 0.01f64..0.5, 0.1f64..10.0),
        )
            .prop_map(
                |(
                    distribution,
                    plantings,
                    (c, pw, b),
                    machine_count,
                    split_fraction,
                    (n_grid, trials, seed),
                    (fit_window, floor, alpha, cc),
                )| {
                    let has_rate = plantings.iter().any(|s| matches!(s, PlantingSpec::Rate { .. }));
                    ExperimentConfig {
                        distribution,
                        mode: if plantings.is_empty() { EnumerationMode::PureVm } else { EnumerationMode::Hybrid },
                        plantings,
                        budget: StepBudget::new(Ratio::from_integer(c), pw, b),
                        machine_count,
                        split_fraction,
                        rate: has_rate.then(|| RateController::new(alpha, cc, 1000)),
                        n_grid,
                        trials,
                        seed,
                        output_dir: "runs/out".into(),
                        fit_window,
                        floor,
                    }
                },
            )
    }

    proptest! {
        #[test]
        fn text_round_trip(cfg in any_config()) {
            let text = cfg.to_text();
            prop_assert_eq!(parse_config(&text).unwrap(), cfg.clone());
            prop_assert_eq!(parse_config(&text).unwrap().to_text(), text);
        }
    }
}
