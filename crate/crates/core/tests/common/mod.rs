#![allow(dead_code)]

use cmikit::{seed, RowMatrix};
use rand_distr::{Distribution, StandardNormal};

pub fn normals(n: usize, d: usize, mean: f64, seed_value: u64) -> RowMatrix {
    let mut rng = seed::rng(seed_value);
    let data = (0..n * d)
        .map(|_| mean + Distribution::<f64>::sample(&StandardNormal, &mut rng))
        .collect();
    RowMatrix::new(n, d, data).unwrap()
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// `-½ ln(1 − ρ²)` per coordinate pair.
pub fn gauss_mi(dim: usize, rho: f64) -> f64 {
    -0.5 * dim as f64 * (1.0 - rho * rho).ln()
}
