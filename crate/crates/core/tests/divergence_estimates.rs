mod common;

use cmikit::datagen::gen_gauss_corr;
use cmikit::divergence::{classifier_dkl, f_mine_dkl, ClassifierKind, DivergenceConfig, FMineConfig};
use cmikit::estimators::{classifier_mi, DivergenceBackend, EstimatorConfig};
use cmikit::RowMatrix;
use common::{gauss_mi, mean, normals};

fn joint_and_product(rho: f64, n: usize, s: u64) -> (RowMatrix, RowMatrix) {
    let (d, _) = gen_gauss_corr(1, rho, n, s).unwrap();
    let joint = RowMatrix::hstack(&[d.x(), d.y()]).unwrap();
    let q = d.product_shuffle(s ^ 7).unwrap();
    let product = RowMatrix::hstack(&[q.x(), q.y()]).unwrap();
    (joint, product)
}

#[test]
fn same_distribution_gives_near_zero() {
    let est = classifier_dkl(&normals(2000, 3, 0.0, 1), &normals(2000, 3, 0.0, 2), &DivergenceConfig::default()).unwrap();
    assert!(est.value.abs() < 0.05, "{}", est.value);
    assert_eq!(est.per_iteration.len(), 2);
    assert!((est.value - mean(&est.per_iteration)).abs() < 1e-15);
}

#[test]
fn iid_samples_average_to_zero() {
    let values: Vec<f64> = (0..5)
        .map(|s| {
            classifier_dkl(&normals(2000, 2, 0.0, 10 + s), &normals(2000, 2, 0.0, 20 + s), &DivergenceConfig::default().with_seed(s))
                .unwrap()
                .value
        })
        .collect();
    assert!(mean(&values).abs() < 0.05, "{values:?}");
}

#[test]
fn correlated_gaussian_divergence() {
    let (p, q) = joint_and_product(0.9, 5000, 3);
    let est = classifier_dkl(&p, &q, &DivergenceConfig::default()).unwrap();
    assert!((est.value - gauss_mi(1, 0.9)).abs() < 0.15, "{}", est.value);
    assert!(est.mean_eval_accuracy.unwrap() > 0.6);
}

#[test]
fn mean_shift_divergence() {
    let est = classifier_dkl(&normals(10_000, 1, 0.0, 1), &normals(10_000, 1, 1.0, 2), &DivergenceConfig::default()).unwrap();
    assert!((est.value - 0.5).abs() < 0.1, "{}", est.value);
}

#[test]
fn estimates_increase_with_correlation() {
    let avg = |rho: f64| {
        mean(
            &(0..5)
                .map(|s| {
                    let (d, _) = gen_gauss_corr(1, rho, 2000, s).unwrap();
                    classifier_mi(d.x(), d.y(), &EstimatorConfig::ccmi().with_seed(s)).unwrap().value
                })
                .collect::<Vec<_>>(),
        )
    };
    let (a, b, c) = (avg(0.3), avg(0.6), avg(0.9));
    assert!(a < b && b < c, "{a} {b} {c}");
}

#[test]
fn clipping_toward_half_shrinks_estimate() {
    let (p, q) = joint_and_product(0.9, 2000, 4);
    let wide = classifier_dkl(&p, &q, &DivergenceConfig::default()).unwrap().value;
    let narrow = classifier_dkl(&p, &q, &DivergenceConfig { clip: 0.499, ..Default::default() }).unwrap().value;
    assert!(narrow.abs() < 0.01, "{narrow}");
    assert!(wide > narrow);
}

#[test]
fn logistic_classifier_cannot_see_correlation() {
    let (p, q) = joint_and_product(0.9, 5000, 5);
    let cfg = DivergenceConfig {
        classifier: ClassifierKind::Logistic,
        ..Default::default()
    };
    let v = classifier_dkl(&p, &q, &cfg).unwrap().value;
    assert!(v < 0.1, "{v}");
}

#[test]
fn calibration_is_collected_on_request() {
    let (p, q) = joint_and_product(0.5, 2000, 6);
    let cfg = DivergenceConfig {
        calibration_bins: Some(10),
        ..Default::default()
    };
    let est = classifier_dkl(&p, &q, &cfg).unwrap();
    let curve = est.calibration.unwrap();
    assert_eq!(curve.total(), 2 * 2000);
    assert!(curve.expected_calibration_error() < 0.1);
}

#[test]
fn f_mine_divergence() {
    let (p, q) = joint_and_product(0.6, 5000, 1);
    let v = f_mine_dkl(&p, &q, &FMineConfig::default()).unwrap().value;
    assert!((v - gauss_mi(1, 0.6)).abs() < 0.15, "{v}");
    let same = f_mine_dkl(&normals(2000, 2, 0.0, 1), &normals(2000, 2, 0.0, 2), &FMineConfig::default()).unwrap();
    assert!(same.value.abs() < 0.05, "{}", same.value);
}

#[test]
fn f_mine_is_a_lower_bound_on_average() {
    let cfg = EstimatorConfig {
        divergence: DivergenceBackend::FMine(FMineConfig::default()),
        ..EstimatorConfig::ccmi()
    };
    let values: Vec<f64> = (0..20)
        .map(|s| {
            let (d, _) = gen_gauss_corr(1, 0.6, 2000, 100 + s).unwrap();
            classifier_mi(d.x(), d.y(), &cfg.clone().with_seed(s)).unwrap().value
        })
        .collect();
    assert!(mean(&values) <= gauss_mi(1, 0.6) + 0.05, "{values:?}");
}
