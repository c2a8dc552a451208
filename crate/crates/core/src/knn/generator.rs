//! kNN-permutation conditional generator: emulates draws from
//! `p(x, z) p(y | z)` by swapping in the `y` of a nearby `z`.

use rand::Rng as _;
use rayon::prelude::*;

use super::kdtree::KdTree;
use crate::dataset::SampleSet;
use crate::error::{Error, Result};
use crate::matrix::RowMatrix;
use crate::seed;

pub const DEFAULT_GENERATOR_K: usize = 5;

/// For every row `i`, pick uniformly among the `k` nearest other rows in `z`
/// and emit `(x_i, y_j, z_i)`.
pub fn knn_permute_generator(d: &SampleSet, k: usize, seed: u64) -> Result<SampleSet> {
    let n = d.n();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    if d.dims().2 == 0 {
        return Err(Error::InvalidConfig("kNN permutation needs a z block".into()));
    }
    if k == 0 || k >= n {
        return Err(Error::InvalidConfig(format!("k = {k} out of range 1..={}", n - 1)));
    }
    let tree = KdTree::new(d.z())?;
    let neighbours: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| tree.knn_query_excluding(d.z().row(i), k, Some(i)).map(|r| r.0))
        .collect::<Result<_>>()?;
    let mut rng = seed::rng(seed);
    let pick: Vec<usize> = neighbours
        .iter()
        .map(|nb| nb[rng.random_range(0..nb.len())])
        .collect();
    d.with_y(d.y().select_rows(&pick))
}

/// Draw `y′ ~ g(y | z)` for each target `z` by choosing uniformly among the
/// `k` nearest `z` in `pool` and returning that row's `y`.
pub fn knn_conditional_sample(
    pool: &SampleSet,
    target_z: &RowMatrix,
    k: usize,
    seed: u64,
) -> Result<RowMatrix> {
    if pool.dims().2 == 0 {
        return Err(Error::InvalidConfig("kNN permutation needs a z block".into()));
    }
    if target_z.cols() != pool.dims().2 {
        return Err(Error::DimensionMismatch {
            expected: pool.dims().2,
            got: target_z.cols(),
        });
    }
    if k == 0 || k > pool.n() {
        return Err(Error::InvalidConfig(format!("k = {k} out of range 1..={}", pool.n())));
    }
    let tree = KdTree::new(pool.z())?;
    let neighbours: Vec<Vec<usize>> = (0..target_z.rows())
        .into_par_iter()
        .map(|i| tree.knn_query(target_z.row(i), k).map(|r| r.0))
        .collect::<Result<_>>()?;
    let mut rng = seed::rng(seed);
    let pick: Vec<usize> = neighbours
        .iter()
        .map(|nb| nb[rng.random_range(0..nb.len())])
        .collect();
    Ok(pool.y().select_rows(&pick))
}
