use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use cmikit::datagen::{gen_gauss_corr, gen_linear, LinearModel};
use cmikit::divergence::dv_plugin;
use cmikit::knn::{ksg_cmi_multi, KdTree};
use cmikit::nn::{fit_classifier, MlpArchitecture, MlpClassifier, TrainConfig};
use cmikit::Block;

fn kdtree(c: &mut Criterion) {
    let mut g = c.benchmark_group("kdtree_knn");
    for d in [2usize, 8] {
        let (data, _) = gen_gauss_corr(d / 2, 0.5, 5000, 1).unwrap();
        let points = data.project(&[Block::X, Block::Y]).unwrap();
        let tree = KdTree::new(&points).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(d), &d, |b, _| {
            b.iter(|| {
                for i in (0..points.rows()).step_by(10) {
                    black_box(tree.knn_query_excluding(points.row(i), 4, Some(i)).unwrap());
                }
            })
        });
    }
    g.finish();
}

fn ksg(c: &mut Criterion) {
    let mut g = c.benchmark_group("ksg_cmi");
    g.sample_size(10);
    for dz in [1usize, 20] {
        let data = gen_linear(LinearModel::I, dz, 2000, 0.1, 3).unwrap().0;
        g.bench_with_input(BenchmarkId::from_parameter(dz), &dz, |b, _| {
            b.iter(|| black_box(ksg_cmi_multi(&data, &[3], 0).unwrap()))
        });
    }
    g.finish();
}

fn mlp_epoch(c: &mut Criterion) {
    let (data, _) = gen_gauss_corr(5, 0.5, 4000, 2).unwrap();
    let pos = data.project(&[Block::X, Block::Y]).unwrap();
    let neg = data.product_shuffle(4).unwrap().project(&[Block::X, Block::Y]).unwrap();
    let cfg = TrainConfig { epochs: 1, ..TrainConfig::default() };
    let arch = MlpArchitecture::standard(pos.cols()).unwrap();
    let mut g = c.benchmark_group("mlp");
    g.sample_size(20);
    g.bench_function("epoch_4000x2_d10", |b| {
        b.iter(|| {
            let mut clf = MlpClassifier::new(arch.clone(), 0).unwrap();
            black_box(fit_classifier(&mut clf, &pos, &neg, &cfg).unwrap())
        })
    });
    g.finish();
}

fn dv(c: &mut Criterion) {
    let n = 100_000;
    let p: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    let q: Vec<f64> = p.iter().map(|v| 1.0 - v * v).collect();
    c.bench_function("dv_plugin_1e5", |b| b.iter(|| black_box(dv_plugin(&p, &q, 1e-3).unwrap())));
}

criterion_group!(benches, kdtree, ksg, mlp_epoch, dv);
criterion_main!(benches);
