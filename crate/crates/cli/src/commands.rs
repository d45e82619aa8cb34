use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use unilearn::bounds::{self, Coupling};
use unilearn::config::{parse_config, ExperimentConfig, Resolved};
use unilearn::distributions::make_rate_learner;
use unilearn::harness::{self, CurveLearner, LearningCurve};
use unilearn::registry::builtin;
use unilearn::seed;
use unilearn::universal::{continuous_learn, universal_learn};
use unilearn::vm::enumerate_program;
use unilearn::{Dataset, StepBudget};

use crate::output::{header, Sink};
use crate::{Command, ConfigArgs};

pub fn parse_window(s: &str) -> Result<(u64, u64), String> {
    let (lo, hi) = s.split_once(',').ok_or("expected `lo,hi`")?;
    let lo: u64 = lo.trim().parse().map_err(|_| format!("bad window start {lo:?}"))?;
    let hi: u64 = hi.trim().parse().map_err(|_| format!("bad window end {hi:?}"))?;
    if lo > hi {
        return Err("window start exceeds its end".into());
    }
    Ok((lo, hi))
}

struct Loaded {
    config: ExperimentConfig,
    resolved: Resolved,
}

fn load(args: &ConfigArgs) -> Result<Loaded> {
    let text = std::fs::read_to_string(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    let mut config = parse_config(&text).map_err(|e| anyhow!("{}: {e}", args.config.display()))?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let resolved = config.resolve()?;
    Ok(Loaded { config, resolved })
}

fn sink(args: &ConfigArgs, config: &ExperimentConfig, file: String) -> Sink {
    Sink::choose(args.out.as_deref(), Some(PathBuf::from(&config.output_dir).join(file)))
}

/// Returns whether every check the command performs passed.
pub fn run(command: Command) -> Result<bool> {
    match command {
        Command::Enumerate { count, start, out } => enumerate(count, start, out.as_deref()),
        Command::Learn { common, n, data, predictor } => learn(&common, n, data.as_deref(), predictor.as_deref()),
        Command::SimulateContinuous { common, halt_after, n } => simulate_continuous(&common, halt_after, n),
        Command::Curve { common, learner } => curve(&common, &learner),
        Command::Fit { curve, floor, window, out } => fit(&curve, floor, window, out.as_deref()),
        Command::VerifyBounds { seed, trials, out } => verify_bounds(seed, trials, out.as_deref()),
        Command::Transient { common, index } => transient(&common, index),
        Command::Regret { common } => regret(&common),
    }
}

fn enumerate(count: u64, start: u64, out: Option<&Path>) -> Result<bool> {
    let end = start.checked_add(count).ok_or_else(|| anyhow!("index range overflows"))?;
    let mut body = String::new();
    for i in start..end {
        body.push_str(&format!("# index {i}\n"));
        body.push_str(&enumerate_program(i).to_text());
    }
    Sink::choose(out, None).write(&body)?;
    Ok(true)
}

fn dataset_for(loaded: &Loaded, n: Option<u64>, data: Option<&Path>) -> Result<(Dataset, String)> {
    if let Some(path) = data {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let d = Dataset::from_text(&text).map_err(|e| match e.line {
            Some(l) => anyhow!("{}:{l}: {}", path.display(), e.message),
            None => anyhow!("{}: {}", path.display(), e.message),
        })?;
        return Ok((d, format!("file:{}", path.display())));
    }
    let n = n.unwrap_or(loaded.config.n_grid[0]);
    let seed = harness::trial_seed(loaded.config.seed, n, 0);
    Ok((loaded.resolved.distribution.sample_dataset(n as usize, seed), format!("sampled n={n} seed={seed}")))
}

fn learn(args: &ConfigArgs, n: Option<u64>, data: Option<&Path>, predictor_out: Option<&Path>) -> Result<bool> {
    let loaded = load(args)?;
    let (dataset, source) = dataset_for(&loaded, n, data)?;
    let (predictor, report) = universal_learn(&dataset, &loaded.resolved.universal)?;
    let loss = loaded.resolved.distribution.true_loss(&predictor, report.budget);
    let mut body = header("learn", Some(&loaded.config), &[("data", source)]);
    body.push_str(&report.to_text());
    body.push_str(&format!("true_loss\t{loss}\n"));
    sink(args, &loaded.config, format!("learn-n{}.txt", dataset.len())).write(&body)?;
    if let Some(path) = predictor_out {
        Sink::choose(Some(path), None).write(&predictor.to_text())?;
    }
    Ok(true)
}

fn simulate_continuous(args: &ConfigArgs, halt_after: u64, n: Option<u64>) -> Result<bool> {
    let loaded = load(args)?;
    let (dataset, source) = dataset_for(&loaded, n, None)?;
    let universal = &loaded.resolved.universal;
    let outcome = continuous_learn(&dataset, universal, halt_after)?;
    let mut batch_cfg = universal.clone();
    batch_cfg.budget = StepBudget::constant(outcome.rounds);
    let (batch_predictor, batch) = universal_learn(&dataset, &batch_cfg)?;
    let agrees = batch_predictor == outcome.predictor && batch.selected == outcome.selected;

    let mut body = header(
        "simulate-continuous",
        Some(&loaded.config),
        &[("data", source), ("halt_after", halt_after.to_string())],
    );
    body.push_str(&format!("k\t{}\nrounds\t{}\n", outcome.machine_count, outcome.rounds));
    match (outcome.selected, outcome.est_loss) {
        (Some(i), Some(l)) => body.push_str(&format!("selected\t{i}\nest_loss\t{}/{}\n", l.numer(), l.denom())),
        _ => body.push_str("selected\tnone\tfallback=constant-0\n"),
    }
    body.push_str(&format!(
        "eval_steps\t{}\nbatch_budget\t{}\nbatch_agrees\t{agrees}\n",
        outcome.eval_steps, outcome.rounds
    ));
    body.push_str("# trajectory: time\tindex\test_loss\n");
    for t in &outcome.trajectory {
        body.push_str(&format!("{}\t{}\t{}/{}\n", t.time, t.index, t.est_loss.numer(), t.est_loss.denom()));
    }
    sink(args, &loaded.config, format!("continuous-n{}-t{halt_after}.txt", dataset.len())).write(&body)?;
    Ok(agrees)
}

fn curve(args: &ConfigArgs, learner_name: &str) -> Result<bool> {
    let loaded = load(args)?;
    let cfg = &loaded.config;
    let dist = &loaded.resolved.distribution;
    let native: Option<std::sync::Arc<dyn unilearn::registry::NativeLearner>> = match learner_name {
        "universal" => None,
        "rate" => {
            let controller = cfg.rate.ok_or_else(|| anyhow!("learner `rate` needs a [rate] section"))?;
            Some(std::sync::Arc::new(make_rate_learner(controller, dist)?))
        }
        other => Some(builtin(other).ok_or_else(|| anyhow!("unknown learner {other:?}"))?),
    };
    let learner = match &native {
        None => CurveLearner::Universal(&loaded.resolved.universal),
        Some(l) => CurveLearner::Native { learner: l.as_ref(), predict_budget: &cfg.budget },
    };
    let curve: LearningCurve<f64> = harness::learning_curve(learner, dist, &cfg.n_grid, cfg.trials, cfg.seed)?;
    let mut body = header("curve", Some(cfg), &[]);
    body.push_str(&curve.to_csv());
    sink(args, cfg, format!("curve-{learner_name}.csv")).write(&body)?;
    Ok(true)
}

fn fit(path: &Path, floor: f64, window: Option<(u64, u64)>, out: Option<&Path>) -> Result<bool> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let curve = LearningCurve::<f64>::from_csv(&text).map_err(|e| match e.line {
        Some(l) => anyhow!("{}:{l}: {}", path.display(), e.message),
        None => anyhow!("{}: {}", path.display(), e.message),
    })?;
    let fit = harness::fit_power_law(&curve, floor, window)?;
    let mut body = header("fit", None, &[("curve", path.display().to_string()), ("learner", curve.learner_id.clone())]);
    body.push_str(&fit.to_csv());
    Sink::choose(out, None).write(&body)?;
    Ok(true)
}

const KS: [u64; 5] = [1, 2, 16, 256, 4096];
const SIGMAS: [f64; 3] = [0.5, 1.0, 2.0];

fn verify_bounds(root: u64, trials: u64, out: Option<&Path>) -> Result<bool> {
    if trials == 0 {
        bail!("trials must be at least 1");
    }
    let mut rows: Vec<(String, String, f64, f64, f64, bool)> = Vec::new();
    let mut counter = 0u64;
    for coupling in [Coupling::Independent, Coupling::SharedNoise] {
        for &k in &KS {
            for &sigma in &SIGMAS {
                let check = bounds::mc_verify_subgaussian_max(k, sigma, trials, seed::child(root, counter), coupling);
                counter += 1;
                rows.push((
                    format!("max-subgaussian-{}", coupling.as_str()),
                    format!("k={k} sigma={sigma} trials={trials}"),
                    check.mean,
                    check.bound,
                    check.margin(),
                    check.pass,
                ));
                if coupling == Coupling::Independent && k == 2 && sigma == 1.0 {
                    // Tolerance 0.003 at one million trials, scaled as 1/sqrt(trials).
                    let exact = std::f64::consts::FRAC_2_SQRT_PI / 2.0;
                    let tol = 0.003 * (1e6 / trials as f64).sqrt();
                    let gap = (check.mean - exact).abs();
                    rows.push((
                        "max-of-two-closed-form".into(),
                        format!("tol={tol:.6}"),
                        check.mean,
                        exact,
                        tol - gap,
                        gap <= tol,
                    ));
                }
            }
        }
    }
    for n in [100u64, 1000, 10_000, 1_000_000] {
        let lemma: f64 = bounds::lemma1_bound(n)?;
        let nf = n as f64;
        let alt = 10.0 * (2.0 * (2.0 * nf.ln()).ln()).sqrt() / nf.sqrt();
        let rel = (lemma - alt).abs() / alt;
        rows.push(("lemma-identity".into(), format!("n={n}"), lemma, alt, 1e-12 - rel, rel < 1e-12));
        let k = nf.log2().floor() as u64;
        let report = bounds::BoundReport::<f64>::for_machine_count(n, k, 0.01);
        rows.push((
            "regret-is-twice-eps".into(),
            format!("n={n} k={k}"),
            report.regret_bound,
            2.0 * report.eps_bound,
            0.0,
            report.regret_bound == 2.0 * report.eps_bound,
        ));
    }
    let all = rows.iter().all(|r| r.5);
    let mut body = header("verify-bounds", None, &[("seed", root.to_string()), ("trials", trials.to_string())]);
    body.push_str("check,params,empirical,bound,margin,pass\n");
    for (name, params, emp, bound, margin, pass) in &rows {
        body.push_str(&format!(
            "{name},{params},{emp:.9},{bound:.9},{margin:.9},{}\n",
            if *pass { "pass" } else { "FAIL" }
        ));
    }
    body.push_str(&format!("# overall={}\n", if all { "pass" } else { "FAIL" }));
    Sink::choose(out, None).write(&body)?;
    Ok(all)
}

fn transient(args: &ConfigArgs, index: u64) -> Result<bool> {
    let loaded = load(args)?;
    let cfg = &loaded.config;
    let report = harness::transient_threshold(
        &loaded.resolved.universal,
        &loaded.resolved.distribution,
        index,
        &cfg.n_grid,
        cfg.trials,
        cfg.seed,
    )?;
    let mut body = header("transient", Some(cfg), &[]);
    body.push_str(&report.to_csv());
    sink(args, cfg, format!("transient-{index}.csv")).write(&body)?;
    Ok(true)
}

fn regret(args: &ConfigArgs) -> Result<bool> {
    let loaded = load(args)?;
    let cfg = &loaded.config;
    let table: harness::RegretTable<f64> = harness::regret_experiment(
        &loaded.resolved.universal,
        &loaded.resolved.distribution,
        &cfg.n_grid,
        cfg.trials,
        cfg.seed,
    )?;
    let mut body = header("regret", Some(cfg), &[]);
    body.push_str(&table.to_csv());
    body.push_str(&format!("# overall={}\n", if table.all_pass() { "pass" } else { "FAIL" }));
    sink(args, cfg, "regret.csv".into()).write(&body)?;
    Ok(table.all_pass())
}
