use cmikit::cit::{post_nonlinear_specs, reliability_curve, run_cit_benchmark, ReliabilityCurve};
use cmikit::nn::{train_binary_classifier, MlpArchitecture, TrainConfig};
use cmikit::{seed, EstimatorConfig, RowMatrix};
use rand::Rng as _;

#[test]
fn calibrated_predictions_have_small_gaps() {
    let mut rng = seed::rng(1);
    let n = 5000;
    let preds: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let labels: Vec<bool> = preds.iter().map(|&p| rng.random_bool(p)).collect();
    let c = ReliabilityCurve::from_predictions(&preds, &labels, 10).unwrap();
    assert_eq!(c.total(), n);
    assert!(c.max_gap() < 0.1, "{c:?}");
}

#[test]
fn trained_classifier_curve() {
    let mut rng = seed::rng(2);
    let mut draw = |m: f64, n: usize| RowMatrix::column((0..n).map(|_| m + 2.0 * (rng.random::<f64>() - 0.5)).collect());
    let (pos, neg) = (draw(0.5, 1000), draw(-0.5, 1000));
    let clf = train_binary_classifier(&pos, &neg, &MlpArchitecture::standard(1).unwrap(), &TrainConfig::default()).unwrap();
    let eval = RowMatrix::vstack(&[&draw(0.5, 1000), &draw(-0.5, 1000)]).unwrap();
    let labels: Vec<bool> = (0..2000).map(|i| i < 1000).collect();
    let c = reliability_curve(&clf, &eval, &labels, 10).unwrap();
    assert_eq!(c.total(), 2000);
    assert!(c.expected_calibration_error() < 0.1, "{c:?}");
}

#[test]
fn benchmark_is_reproducible() {
    let specs = post_nonlinear_specs(4, 2, 400, 5);
    let cfg = EstimatorConfig::ccmi();
    let a = run_cit_benchmark(&specs, &cfg, 9).unwrap();
    let b = run_cit_benchmark(&specs, &cfg, 9).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.results.len(), 4);
    assert!(a.scores().iter().all(|s| s.is_finite()));
    assert!((0.0..=1.0).contains(&a.metrics.auroc));
    let c = run_cit_benchmark(&specs, &cfg, 10).unwrap();
    assert_ne!(a.scores(), c.scores());
}
