use cmikit::cit::{auroc, precision_recall_at, CiLabel, ReliabilityCurve};
use cmikit::dataset::{derangement, split_indices, SampleSet};
use cmikit::divergence::{dv_from_log_ratios, dv_plugin};
use cmikit::knn::{digamma, max_norm_distance, KdTree};
use cmikit::nn::{MlpArchitecture, MlpClassifier};
use cmikit::{seed, RowMatrix};
use proptest::prelude::*;
use rand::Rng as _;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

#[test]
fn mlp_gradient_matches_finite_differences() {
    let mut total = 0usize;
    let mut good = 0usize;
    for trial in 0..6u64 {
        let mut rng = seed::rng(seed::derive(100, trial));
        let d = 2 + (trial as usize % 3);
        let hidden = if trial % 2 == 0 { vec![6, 5] } else { vec![7] };
        let mut clf = MlpClassifier::new(MlpArchitecture::new(d, hidden).unwrap(), trial).unwrap();
        // non-zero biases so the bias gradient is exercised at generic points
        for p in clf.parameters_mut() {
            *p += 0.1 * (rng.random::<f64>() - 0.5);
        }
        let n = 12;
        let rows = RowMatrix::new(n, d, (0..n * d).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect()).unwrap();
        let labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        let l2 = 0.01;
        let (_, grad) = clf.bce_objective_and_gradient(&rows, &labels, l2).unwrap();
        let h = 1e-6;
        for j in 0..clf.num_parameters() {
            let orig = clf.parameters()[j];
            clf.parameters_mut()[j] = orig + h;
            let up = clf.bce_objective(&rows, &labels, l2).unwrap();
            clf.parameters_mut()[j] = orig - h;
            let down = clf.bce_objective(&rows, &labels, l2).unwrap();
            clf.parameters_mut()[j] = orig;
            let numeric = (up - down) / (2.0 * h);
            total += 1;
            good += usize::from(rel_err(grad[j], numeric) < 1e-4);
        }
    }
    assert!(good as f64 >= 0.99 * total as f64, "{good} of {total} coordinates agree");
}

#[test]
fn objective_value_agrees_with_gradient_pass() {
    let mut rng = seed::rng(5);
    let clf = MlpClassifier::new(MlpArchitecture::standard(3).unwrap(), 1).unwrap();
    let rows = RowMatrix::new(20, 3, (0..60).map(|_| rng.random::<f64>()).collect()).unwrap();
    let labels: Vec<bool> = (0..20).map(|i| i % 3 == 0).collect();
    let (a, _) = clf.bce_objective_and_gradient(&rows, &labels, 0.001).unwrap();
    let b = clf.bce_objective(&rows, &labels, 0.001).unwrap();
    assert!((a - b).abs() < 1e-12);
}

fn grid_points(n: usize, d: usize, levels: u32, seed_value: u64) -> RowMatrix {
    let mut rng = seed::rng(seed_value);
    let data = (0..n * d)
        .map(|_| f64::from(rng.random_range(0..levels)) * 0.5)
        .collect();
    RowMatrix::new(n, d, data).unwrap()
}

fn brute_knn(points: &RowMatrix, q: &[f64], k: usize, exclude: Option<usize>) -> (Vec<usize>, Vec<f64>) {
    let mut all: Vec<(f64, usize)> = (0..points.rows())
        .filter(|&i| Some(i) != exclude)
        .map(|i| (max_norm_distance(q, points.row(i)), i))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    all.truncate(k);
    all.into_iter().map(|(d, i)| (i, d)).unzip()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kdtree_matches_brute_force(
        n in 1usize..=500,
        d in 1usize..=10,
        levels in 2u32..12,
        seed_value in any::<u64>(),
        k_frac in 0.0f64..1.0,
    ) {
        let points = grid_points(n, d, levels, seed_value);
        let tree = KdTree::new(&points).unwrap();
        let queries = grid_points(5, d, levels, seed_value ^ 1);
        let k = 1 + ((n - 1) as f64 * k_frac) as usize;
        for qi in 0..queries.rows() {
            let q = queries.row(qi);
            prop_assert_eq!(tree.knn_query(q, k).unwrap(), brute_knn(&points, q, k, None));
            let r = 0.5 * f64::from(levels) * k_frac;
            let brute = (0..n).filter(|&i| max_norm_distance(q, points.row(i)) < r).count();
            prop_assert_eq!(tree.count_within(q, r).unwrap(), brute);
        }
        if n >= 2 {
            let i = seed_value as usize % n;
            let k = k.min(n - 1);
            prop_assert_eq!(
                tree.knn_query_excluding(points.row(i), k, Some(i)).unwrap(),
                brute_knn(&points, points.row(i), k, Some(i))
            );
        }
    }

    #[test]
    fn digamma_recurrence(x in 0.01f64..500.0) {
        let lhs = digamma(x + 1.0).unwrap();
        let rhs = digamma(x).unwrap() + 1.0 / x;
        prop_assert!((lhs - rhs).abs() < 1e-10, "x = {x}: {lhs} vs {rhs}");
    }

    #[test]
    fn dv_invariant_to_ratio_scale(
        lp in prop::collection::vec(-5.0f64..5.0, 1..50),
        lq in prop::collection::vec(-5.0f64..5.0, 1..50),
        log_alpha in -3.0f64..3.0,
    ) {
        let base = dv_from_log_ratios(&lp, &lq).unwrap();
        let sp: Vec<f64> = lp.iter().map(|v| v + log_alpha).collect();
        let sq: Vec<f64> = lq.iter().map(|v| v + log_alpha).collect();
        let scaled = dv_from_log_ratios(&sp, &sq).unwrap();
        prop_assert!((base - scaled).abs() <= 1e-12 * (1.0 + base.abs() + log_alpha.abs()));
    }

    #[test]
    fn dv_order_independent(
        pp in prop::collection::vec(0.0f64..=1.0, 2..40),
        pq in prop::collection::vec(0.0f64..=1.0, 2..40),
    ) {
        let a = dv_plugin(&pp, &pq, 1e-3).unwrap();
        let mut rp = pp.clone();
        let mut rq = pq.clone();
        rp.reverse();
        rq.rotate_left(1);
        let b = dv_plugin(&rp, &rq, 1e-3).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        let cap = 2.0 * ((1.0 - 1e-3) / 1e-3f64).ln();
        prop_assert!(a <= cap + 1e-9);
    }

    #[test]
    fn derangement_has_no_fixed_points(n in 2usize..300, s in any::<u64>()) {
        let p = derangement(n, &mut seed::rng(s)).unwrap();
        let mut sorted = p.clone();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, (0..n).collect::<Vec<_>>());
        prop_assert!(p.iter().enumerate().all(|(i, &j)| i != j));
    }

    #[test]
    fn product_shuffle_moves_yz_together(n in 2usize..200, s in any::<u64>()) {
        let x = RowMatrix::column((0..n).map(|i| i as f64).collect());
        let y = RowMatrix::column((0..n).map(|i| i as f64).collect());
        let z = RowMatrix::column((0..n).map(|i| i as f64 + 0.5).collect());
        let d = SampleSet::new(x, y, z).unwrap();
        let q = d.product_shuffle(s).unwrap();
        prop_assert_eq!(q.x(), d.x());
        for i in 0..n {
            prop_assert!(q.y().get(i, 0) != i as f64);
            prop_assert_eq!(q.z().get(i, 0), q.y().get(i, 0) + 0.5);
        }
    }

    #[test]
    fn split_is_a_partition(n in 2usize..500, s in any::<u64>()) {
        let (a, b) = split_indices(n, s).unwrap();
        prop_assert_eq!(a.len(), n.div_ceil(2));
        prop_assert_eq!(b.len(), n / 2);
        let mut all: Vec<usize> = a.into_iter().chain(b).collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn csv_round_trip(n in 1usize..30, dz in 0usize..4, s in any::<u64>()) {
        let mut rng = seed::rng(s);
        let mut block = |d: usize| {
            RowMatrix::new(n, d, (0..n * d).map(|_| rng.random::<f64>() * 1e3 - 500.0).collect()).unwrap()
        };
        let d = SampleSet::new(block(1), block(2), block(dz)).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let back = SampleSet::read_csv(buf.as_slice(), 1, 2, dz).unwrap();
        prop_assert_eq!(back, d);
    }

    #[test]
    fn auroc_monotone_transform_and_flip(
        raw in prop::collection::vec((-10.0f64..10.0, any::<bool>()), 2..60),
    ) {
        let scores: Vec<f64> = raw.iter().map(|r| r.0).collect();
        let labels: Vec<CiLabel> = raw
            .iter()
            .map(|r| if r.1 { CiLabel::Dependent } else { CiLabel::Independent })
            .collect();
        prop_assume!(labels.contains(&CiLabel::Dependent) && labels.contains(&CiLabel::Independent));
        let a = auroc(&scores, &labels).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        let t: Vec<f64> = scores.iter().map(|s| (s / 3.0).exp() + 2.0).collect();
        prop_assert!((auroc(&t, &labels).unwrap() - a).abs() < 1e-12);
        let flipped: Vec<CiLabel> = labels.iter().map(|l| l.flipped()).collect();
        prop_assert!((auroc(&scores, &flipped).unwrap() + a - 1.0).abs() < 1e-12);
        let (p, r) = precision_recall_at(&scores, &labels, 0.0).unwrap();
        prop_assert!((0.0..=1.0).contains(&r));
        prop_assert!(p.is_none_or(|p| (0.0..=1.0).contains(&p)));
    }

    #[test]
    fn reliability_counts_sum_to_n(
        preds in prop::collection::vec((0.0f64..=1.0, any::<bool>()), 1..200),
        bins in 1usize..20,
    ) {
        let p: Vec<f64> = preds.iter().map(|v| v.0).collect();
        let l: Vec<bool> = preds.iter().map(|v| v.1).collect();
        let c = ReliabilityCurve::from_predictions(&p, &l, bins).unwrap();
        prop_assert_eq!(c.total(), p.len());
        prop_assert_eq!(c.edges.len(), bins + 1);
        for (m, (lo, hi)) in c.mean_predicted.iter().zip(c.edges.iter().zip(&c.edges[1..])) {
            if let Some(m) = m {
                prop_assert!(*m >= *lo - 1e-12 && *m <= *hi + 1e-12);
            }
        }
    }
}
