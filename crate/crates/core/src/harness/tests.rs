use super::*;
use crate::distributions::{make_rate_learner, RateController};
use crate::registry::{ConstantLearner, Enumeration, MajorityLearner, PlantedLearner, Planting};
use crate::universal::MachineCount;

fn r(n: i128, d: i128) -> Rational {
    Rational::new(n, d)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn planted(name: &str, cost: &str, index: u64) -> Planting {
    Planting::Native(PlantedLearner::builtin(name, cost.parse().unwrap(), index).unwrap())
}

fn hybrid(plantings: Vec<Planting>) -> UniversalConfig {
    UniversalConfig::new("n^2 + 1000".parse().unwrap(), Enumeration::hybrid(plantings).unwrap())
}

#[test]
fn fit_recovers_exact_power_law() {
    let grid = log_grid(16, 1 << 20, None);
    let fit = fit_power_law(&synthesize_curve(4.0f64, 0.5, 0.0, &grid), 0.0, None).unwrap();
    assert!(rel(fit.c, 4.0) < 1e-9 && rel(fit.alpha, 0.5) < 1e-9, "{fit:?}");
    assert!(fit.residual < 1e-9);
    assert_eq!(fit.fit_window, (16, 1 << 20));

    let fit = fit_power_law(&synthesize_curve(2.0f64, 0.3, 0.1, &grid), 0.1, None).unwrap();
    assert!(rel(fit.c, 2.0) < 1e-9 && rel(fit.alpha, 0.3) < 1e-9, "{fit:?}");

    let fit32 = fit_power_law(&synthesize_curve(4.0f32, 0.5, 0.0, &grid), 0.0, None).unwrap();
    assert!((fit32.alpha - 0.5).abs() < 1e-4);
}

#[test]
fn fit_window_and_floor_filtering() {
    let grid = log_grid(1, 1024, None);
    let curve = synthesize_curve(1.0f64, 0.5, 0.0, &grid);
    let fit = fit_power_law(&curve, 0.0, Some((64, 512))).unwrap();
    assert_eq!((fit.fit_window, fit.points_used), ((64, 512), 4));
    assert!(fit_power_law(&curve, 0.0, Some((64, 128))).is_err());
    // Points at or below the floor are dropped.
    assert!(fit_power_law(&curve, 0.2, None).unwrap().points_used < grid.len());
    assert!(fit_power_law(&curve, 2.0, None).is_err());
}

#[test]
fn log_grids() {
    assert_eq!(log_grid(32, 256, None), [32, 64, 128, 256]);
    assert_eq!(log_grid(1000, 100_000, Some(3)), [1000, 10_000, 100_000]);
    assert_eq!(log_grid(5, 5, Some(4)), [5]);
}

#[test]
fn constant_zero_on_all_zero_labels() {
    let dist = FiniteDistribution::uniform_constant(16, r(0, 1)).unwrap();
    let budget = StepBudget::constant(100);
    let learner = ConstantLearner(false);
    let curve: LearningCurve<f64> =
        learning_curve(CurveLearner::Native { learner: &learner, predict_budget: &budget }, &dist, &[10, 100], 5, 1)
            .unwrap();
    assert!(curve.points.iter().all(|p| p.mean_loss == 0.0 && p.std_error == 0.0));
}

#[test]
fn majority_on_balanced_threshold_is_flat_half() {
    let dist = FiniteDistribution::threshold(256, 128, r(1, 10)).unwrap();
    let budget = StepBudget::constant(100);
    let curve: LearningCurve<f64> = learning_curve(
        CurveLearner::Native { learner: &MajorityLearner, predict_budget: &budget },
        &dist,
        &[11, 101, 1001],
        20,
        2,
    )
    .unwrap();
    assert!(curve.points.iter().all(|p| p.mean_loss == 0.5), "{curve:?}");
}

#[test]
fn rate_learner_curve_is_closed_form() {
    let dist = FiniteDistribution::threshold(4096, 2048, r(0, 1)).unwrap();
    let learner = make_rate_learner(RateController::new(0.3, 1.0, 4096), &dist).unwrap();
    let budget = StepBudget::constant(1000);
    let grid = [10u64, 100, 1000];
    let curve: LearningCurve<f64> =
        learning_curve(CurveLearner::Native { learner: &learner, predict_budget: &budget }, &dist, &grid, 3, 3)
            .unwrap();
    for (p, n) in curve.points.iter().zip(grid) {
        assert_eq!(p.mean_loss, learner.expected_loss(n).to_f64().unwrap());
        assert!((p.mean_loss - (n as f64).powf(-0.3)).abs() <= learner.granularity().to_f64().unwrap());
    }
}

#[test]
fn curve_csv_round_trip_and_determinism() {
    let dist = FiniteDistribution::threshold(64, 20, r(1, 8)).unwrap();
    let cfg = hybrid(vec![planted("majority", "n", 1), planted("interval-erm", "n", 2)]);
    let a: LearningCurve<f64> = learning_curve(CurveLearner::Universal(&cfg), &dist, &[20, 40, 80], 8, 9).unwrap();
    let b: LearningCurve<f64> = learning_curve(CurveLearner::Universal(&cfg), &dist, &[20, 40, 80], 8, 9).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    let back = LearningCurve::<f64>::from_csv(&a.to_csv()).unwrap();
    assert_eq!(back.to_csv(), a.to_csv());
    assert!(LearningCurve::<f64>::from_csv("n,mean_loss,std_error,trials\n2,0.1,0,1\n1,0.1,0,1\n").is_err());
    assert!(learning_curve::<f64>(CurveLearner::Universal(&cfg), &dist, &[40, 20], 1, 0).is_err());
}

#[test]
fn transient_on_small_noiseless_task() {
    let dist = FiniteDistribution::threshold(16, 8, r(0, 1)).unwrap();
    let cfg = hybrid(vec![planted("majority", "1", 1), planted("constant-1", "1", 2), planted("memorizer", "n", 3)]);
    let report = transient_threshold(&cfg, &dist, 3, &[4, 7, 8, 2048], 11, 5).unwrap();
    assert_eq!(report.activation_n, Some(8));
    let counts: Vec<u64> = report.rows.iter().map(|r| r.selected_count).collect();
    assert_eq!(&counts[..2], [0, 0]);
    assert_eq!(report.rows[3].selected_count, 11);
    assert!(report.observed_switch_n.unwrap() >= 8);
    assert!(report.to_csv().starts_with("# planted_index=3 activation_n=8"));
    assert_eq!(MachineCount::Log2.activation_n(10), Some(1024));
}

#[test]
fn transient_rejects_a_rival_as_good_as_the_planting() {
    let dist = FiniteDistribution::threshold(16, 8, r(0, 1)).unwrap();
    let cfg = hybrid(vec![planted("interval-erm", "n", 1), planted("memorizer", "n", 3)]);
    let err = transient_threshold(&cfg, &dist, 3, &[64], 3, 5).unwrap_err();
    assert!(matches!(err, Error::Precondition(_)), "{err}");
    assert!(transient_threshold(&cfg, &dist, 7, &[64], 3, 5).is_err());
}

#[test]
fn regret_single_candidate_is_zero() {
    let dist = FiniteDistribution::threshold(64, 20, r(1, 8)).unwrap();
    let mut cfg = hybrid(vec![planted("majority", "n", 1)]);
    cfg.machine_count = MachineCount::Fixed(1);
    let table: RegretTable<f64> = regret_experiment(&cfg, &dist, &[100, 1000], 10, 4).unwrap();
    for row in &table.rows {
        assert_eq!(row.mean_regret, 0.0);
        assert_eq!(row.pointwise_violations, 0);
        assert!(row.pass_eps && row.pass_lemma);
    }
}

#[test]
fn regret_within_bounds_with_plantings() {
    let dist = FiniteDistribution::threshold(256, 128, r(1, 10)).unwrap();
    let cfg = hybrid(vec![
        planted("constant-0", "1", 1),
        planted("constant-1", "1", 2),
        planted("majority", "n + 1", 3),
        planted("memorizer", "2*n + 1", 4),
        planted("interval-erm", "4*n + 1", 5),
    ]);
    let table: RegretTable<f64> = regret_experiment(&cfg, &dist, &[1000, 4000], 20, 8).unwrap();
    assert!(table.all_pass(), "{}", table.to_csv());
    assert_eq!(table.rows[0].best_index, 5);
    assert!(table.to_csv().lines().nth(1).unwrap().starts_with("n,k,trials,mean_regret"));
}

#[test]
fn trial_epsilon_matches_recomputation() {
    let dist = FiniteDistribution::threshold(32, 10, r(1, 4)).unwrap();
    let cfg = hybrid(vec![planted("majority", "1", 1), planted("interval-erm", "1", 2), planted("memorizer", "1", 3)]);
    let cache = LossCache::new(&dist);
    let outcome = universal_trial(&cfg, &cache, 500, 77).unwrap();
    let eps = outcome
        .candidate_losses
        .iter()
        .zip(&outcome.est_losses)
        .map(|(a, b)| if a > b { a - b } else { b - a })
        .max()
        .unwrap();
    assert_eq!(outcome.epsilon, eps);
    assert!(outcome.pointwise_holds());
    assert_eq!(outcome.candidate_losses.len(), 8);
    assert!(!cache.is_empty());
}
