//! Kraskov–Stögbauer–Grassberger estimators (first variant) under ℓ∞.
//!
//! For each sample the radius ε is the distance to its k-th neighbour in the
//! joint space; marginal counts are the number of *other* samples strictly
//! inside ε in each subspace.
//!
//! - MI:  ψ(k) + ψ(n) − ⟨ψ(n_x + 1) + ψ(n_y + 1)⟩
//! - CMI: ψ(k) − ⟨ψ(n_xz + 1) + ψ(n_yz + 1) − ψ(n_z + 1)⟩
//!
//! Low-dimensional inputs use kd-trees. Above [`TREE_MAX_DIM`] joint
//! coordinates the trees no longer prune, and a single blocked scan that
//! produces all subspace distances at once is faster; both paths give the same
//! counts.

use rand::Rng as _;
use rayon::prelude::*;

use super::digamma::digamma_unchecked as psi;
use super::kdtree::{max_norm_distance, KdTree};
use crate::dataset::SampleSet;
use crate::error::{Error, Result};
use crate::matrix::RowMatrix;
use crate::seed;

pub const DEFAULT_K: usize = 3;
pub const JITTER: f64 = 1e-10;
pub const TREE_MAX_DIM: usize = 8;
const JITTER_SEED: u64 = 0x6b73_6700;

/// Add `U(0, JITTER)` noise to every entry, so duplicate points do not yield
/// zero radii.
fn jitter(m: &RowMatrix, rng: &mut seed::Rng) -> RowMatrix {
    let mut out = m.clone();
    for v in out.as_mut_slice() {
        *v += JITTER * rng.random::<f64>();
    }
    out
}

/// Conditional KSG estimate of `I(X; Y | Z)` with the default jitter seed.
/// With `d_z = 0` this is the KSG estimate of `I(X; Y)`.
pub fn ksg_cmi(d: &SampleSet, k: usize) -> Result<f64> {
    Ok(ksg_cmi_multi(d, &[k], JITTER_SEED)?[0])
}

/// KSG estimate for several `k` at once (one neighbour search at the largest `k`).
pub fn ksg_cmi_multi(d: &SampleSet, ks: &[usize], jitter_seed: u64) -> Result<Vec<f64>> {
    let n = d.n();
    let k_max = ks.iter().copied().max().ok_or(Error::Empty("k list"))?;
    if ks.contains(&0) {
        return Err(Error::InvalidConfig("k must be ≥ 1".into()));
    }
    if n <= k_max {
        return Err(Error::TooFewSamples {
            needed: k_max + 1,
            got: n,
        });
    }
    let (dx, dy, dz) = d.dims();
    if dx == 0 || dy == 0 {
        return Err(Error::InvalidConfig("KSG needs non-empty x and y blocks".into()));
    }
    let mut rng = seed::rng(jitter_seed);
    let x = jitter(d.x(), &mut rng);
    let y = jitter(d.y(), &mut rng);
    let z = jitter(d.z(), &mut rng);

    let counts = if dx + dy + dz <= TREE_MAX_DIM {
        tree_counts(&x, &y, &z, ks, k_max)?
    } else {
        scan_counts(&x, &y, &z, ks, k_max)
    };

    let conditional = dz > 0;
    Ok(ks
        .iter()
        .enumerate()
        .map(|(ki, &k)| {
            let mean = counts
                .iter()
                .map(|c| {
                    let [a, b, cz] = c[ki];
                    if conditional {
                        psi(a as f64 + 1.0) + psi(b as f64 + 1.0) - psi(cz as f64 + 1.0)
                    } else {
                        psi(a as f64 + 1.0) + psi(b as f64 + 1.0)
                    }
                })
                .sum::<f64>()
                / n as f64;
            if conditional {
                psi(k as f64) - mean
            } else {
                psi(k as f64) + psi(n as f64) - mean
            }
        })
        .collect())
}

/// Per sample and per k: `[n_xz, n_yz, n_z]` (conditional) or `[n_x, n_y, 0]`.
type Counts = Vec<Vec<[usize; 3]>>;

fn tree_counts(x: &RowMatrix, y: &RowMatrix, z: &RowMatrix, ks: &[usize], k_max: usize) -> Result<Counts> {
    let n = x.rows();
    let conditional = z.cols() > 0;
    let joint = RowMatrix::hstack(&[x, y, z])?;
    let joint_tree = KdTree::new(&joint)?;
    let (tree_a, tree_b, tree_z) = if conditional {
        (
            KdTree::new(&RowMatrix::hstack(&[x, z])?)?,
            KdTree::new(&RowMatrix::hstack(&[y, z])?)?,
            Some(KdTree::new(z)?),
        )
    } else {
        (KdTree::new(x)?, KdTree::new(y)?, None)
    };
    let (dx, dy) = (x.cols(), y.cols());
    (0..n)
        .into_par_iter()
        .map(|i| -> Result<Vec<[usize; 3]>> {
            let q = joint.row(i);
            let (_, dist) = joint_tree.knn_query_excluding(q, k_max, Some(i))?;
            let qx = &q[..dx];
            let qy = &q[dx..dx + dy];
            let qz = &q[dx + dy..];
            let qa: Vec<f64> = if conditional { [qx, qz].concat() } else { qx.to_vec() };
            let qb: Vec<f64> = if conditional { [qy, qz].concat() } else { qy.to_vec() };
            ks.iter()
                .map(|&k| {
                    let eps = dist[k - 1];
                    // the query point itself is always inside (distance 0 < ε)
                    let a = tree_a.count_within(&qa, eps)? - 1;
                    let b = tree_b.count_within(&qb, eps)? - 1;
                    let c = match &tree_z {
                        Some(t) => t.count_within(qz, eps)? - 1,
                        None => 0,
                    };
                    Ok([a, b, c])
                })
                .collect()
        })
        .collect()
}

fn scan_counts(x: &RowMatrix, y: &RowMatrix, z: &RowMatrix, ks: &[usize], k_max: usize) -> Counts {
    let n = x.rows();
    let conditional = z.cols() > 0;
    (0..n)
        .into_par_iter()
        .map_init(
            || (vec![0.0; n], vec![0.0; n], vec![0.0; n], Vec::with_capacity(n)),
            |(ddx, ddy, ddz, joint), i| {
                let (xi, yi, zi) = (x.row(i), y.row(i), z.row(i));
                joint.clear();
                for j in 0..n {
                    ddx[j] = max_norm_distance(xi, x.row(j));
                    ddy[j] = max_norm_distance(yi, y.row(j));
                    ddz[j] = if conditional { max_norm_distance(zi, z.row(j)) } else { 0.0 };
                    if j != i {
                        joint.push(ddx[j].max(ddy[j]).max(ddz[j]));
                    }
                }
                // k-th smallest joint distance for every k, ascending k
                let mut order: Vec<usize> = (0..ks.len()).collect();
                order.sort_by_key(|&p| ks[p]);
                let mut radii = vec![0.0; ks.len()];
                let mut lo = 0;
                for &p in &order {
                    let rank = ks[p] - 1;
                    let (_, kth, _) = joint[lo..].select_nth_unstable_by(rank - lo, f64::total_cmp);
                    radii[p] = *kth;
                    lo = rank;
                }
                debug_assert!(ks.iter().all(|&k| k <= k_max));
                radii
                    .iter()
                    .map(|&eps| {
                        let (mut a, mut b, mut c) = (0usize, 0usize, 0usize);
                        for j in 0..n {
                            if j == i || ddz[j] >= eps {
                                continue;
                            }
                            c += 1;
                            a += usize::from(ddx[j] < eps);
                            b += usize::from(ddy[j] < eps);
                        }
                        if conditional {
                            [a, b, c]
                        } else {
                            [a, b, 0]
                        }
                    })
                    .collect()
            },
        )
        .collect()
}
