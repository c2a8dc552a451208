mod common;

use cmikit::datagen::{gen_linear, LinearModel};
use cmikit::dataset::SampleSet;
use cmikit::knn::{knn_permute_generator, ksg_cmi, ksg_cmi_multi, KdTree};
use cmikit::RowMatrix;
use common::{mean, normals};

#[test]
fn independent_gaussians_give_near_zero() {
    let values: Vec<f64> = (0..10)
        .map(|s| {
            let d = SampleSet::new(normals(5000, 1, 0.0, 3 * s), normals(5000, 1, 0.0, 3 * s + 1), normals(5000, 1, 0.0, 3 * s + 2)).unwrap();
            ksg_cmi(&d, 5).unwrap()
        })
        .collect();
    assert!(mean(&values).abs() < 0.05, "{values:?}");
}

#[test]
fn low_dimensional_linear_model() {
    let (d, gt) = gen_linear(LinearModel::I, 1, 20_000, 0.1, 1).unwrap();
    let v = ksg_cmi(&d, 5).unwrap();
    assert!((v - gt.value).abs() < 0.15, "{v} vs {}", gt.value);
}

#[test]
fn high_dimensional_linear_model_underestimates() {
    let (d, _) = gen_linear(LinearModel::I, 20, 20_000, 0.1, 1).unwrap();
    let v = ksg_cmi(&d, 3).unwrap();
    assert!(v < 1.5, "{v}");
}

#[test]
fn shift_invariance_per_block() {
    let (d, _) = gen_linear(LinearModel::II, 2, 2000, 0.5, 4).unwrap();
    let base = ksg_cmi_multi(&d, &[3, 5], 1).unwrap();
    for (bx, by, bz) in [(1e3, 0.0, 0.0), (0.0, -7.5, 0.0), (0.0, 0.0, 42.0)] {
        let shifted = SampleSet::new(d.x().map(|v| v + bx), d.y().map(|v| v + by), d.z().map(|v| v + bz)).unwrap();
        let s = ksg_cmi_multi(&shifted, &[3, 5], 1).unwrap();
        for (a, b) in base.iter().zip(&s) {
            assert!((a - b).abs() < 1e-6, "{base:?} vs {s:?}");
        }
    }
}

#[test]
fn multi_k_matches_single_k() {
    let (d, _) = gen_linear(LinearModel::I, 3, 1500, 0.3, 2).unwrap();
    let multi = ksg_cmi_multi(&d, &[10, 3, 5], 0x6b73_6700).unwrap();
    for (k, m) in [10, 3, 5].iter().zip(&multi) {
        assert_eq!(ksg_cmi(&d, *k).unwrap(), *m);
    }
}

#[test]
fn high_dimensional_scan_path_is_exercised() {
    // joint dimension 12 takes the blocked scan
    let (d, _) = gen_linear(LinearModel::II, 10, 800, 0.5, 5).unwrap();
    let v = ksg_cmi(&d, 3).unwrap();
    assert!(v.is_finite());
}

#[test]
fn kdtree_matches_scan_on_random_points() {
    let pts = normals(200, 3, 0.0, 9);
    let tree = KdTree::new(&pts).unwrap();
    for qi in 0..20 {
        let q = normals(1, 3, 0.0, 100 + qi);
        let (idx, dist) = tree.knn_query(q.row(0), 5).unwrap();
        let mut all: Vec<(f64, usize)> = (0..200)
            .map(|i| (cmikit::knn::max_norm_distance(q.row(0), pts.row(i)), i))
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        assert_eq!(idx, all[..5].iter().map(|a| a.1).collect::<Vec<_>>());
        assert_eq!(dist, all[..5].iter().map(|a| a.0).collect::<Vec<_>>());
    }
}

#[test]
fn permutation_generator_stays_within_cluster() {
    let n = 200;
    let z = RowMatrix::column((0..n).map(|i| if i % 2 == 0 { (i as f64) * 1e-3 } else { 1e3 + (i as f64) * 1e-3 }).collect());
    let y = RowMatrix::column((0..n).map(|i| (i % 2) as f64).collect());
    let x = normals(n, 1, 0.0, 1);
    let d = SampleSet::new(x, y, z).unwrap();
    let g = knn_permute_generator(&d, 5, 3).unwrap();
    assert_eq!(g.x(), d.x());
    assert_eq!(g.z(), d.z());
    assert_eq!(g.y(), d.y()); // every neighbour carries the cluster's y value
    assert_eq!(g.n(), n);
}
