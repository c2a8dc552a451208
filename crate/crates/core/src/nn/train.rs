//! Minibatch training loops: BCE for the two-sample classifier and the
//! f-divergence objective for the f-MINE critic.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adam::AdamParams;
use super::mlp::{MlpArchitecture, MlpClassifier, Workspace};
use crate::error::{Error, Result};
use crate::matrix::RowMatrix;
use crate::seed;

/// Optimizer and schedule settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub epochs: usize,
    pub l2_coefficient: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 64,
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            epochs: 20,
            l2_coefficient: 1e-3,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Settings for the f-MINE critic: batch 128, lr 1e-4, β = (0.5, 0.999),
    /// 200 epochs, no weight penalty.
    pub fn f_mine() -> Self {
        Self {
            batch_size: 128,
            learning_rate: 1e-4,
            adam_beta1: 0.5,
            adam_beta2: 0.999,
            epochs: 200,
            l2_coefficient: 0.0,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.batch_size == 0 {
            return bad("batch_size must be > 0");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.adam_beta1 > 0.0 && self.adam_beta1 < 1.0) {
            return bad("adam_beta1 must lie in (0, 1)");
        }
        if !(self.adam_beta2 > 0.0 && self.adam_beta2 < 1.0) {
            return bad("adam_beta2 must lie in (0, 1)");
        }
        if self.epochs == 0 {
            return bad("epochs must be > 0");
        }
        if !(self.l2_coefficient >= 0.0 && self.l2_coefficient.is_finite()) {
            return bad("l2_coefficient must be nonnegative");
        }
        Ok(())
    }

    fn adam(&self) -> AdamParams {
        AdamParams {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
        }
    }
}

fn check_classes(pos: &RowMatrix, neg: &RowMatrix, input_dim: usize) -> Result<()> {
    if pos.rows() == 0 {
        return Err(Error::Empty("positive class"));
    }
    if neg.rows() == 0 {
        return Err(Error::Empty("negative class"));
    }
    for m in [pos, neg] {
        if m.cols() != input_dim {
            return Err(Error::DimensionMismatch {
                expected: input_dim,
                got: m.cols(),
            });
        }
    }
    Ok(())
}

/// Row indices of a uniformly random `keep`-subset of `0..n` (all rows when `keep == n`).
fn subsample(n: usize, keep: usize, rng: &mut seed::Rng) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    if keep < n {
        idx.shuffle(rng);
        idx.truncate(keep);
        idx.sort_unstable();
    }
    idx
}

/// Equalize class sizes by subsampling the larger class.
fn balance(pos: &RowMatrix, neg: &RowMatrix, seed: u64) -> (RowMatrix, RowMatrix) {
    let m = pos.rows().min(neg.rows());
    let mut rng = seed::rng(seed);
    let p = subsample(pos.rows(), m, &mut rng);
    let q = subsample(neg.rows(), m, &mut rng);
    (pos.select_rows(&p), neg.select_rows(&q))
}

fn ensure_finite(clf: &MlpClassifier, epoch: usize) -> Result<()> {
    if clf.all_finite() {
        Ok(())
    } else {
        Err(Error::TrainingDiverged {
            epoch,
            detail: "non-finite network parameter".into(),
        })
    }
}

/// Fit `clf` by BCE on `pos` (label 1) vs `neg` (label 0). Returns the mean
/// minibatch objective of every epoch.
pub fn fit_classifier(
    clf: &mut MlpClassifier,
    pos: &RowMatrix,
    neg: &RowMatrix,
    cfg: &TrainConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let d = clf.architecture().input_dim();
    check_classes(pos, neg, d)?;
    let (pos, neg) = balance(pos, neg, seed::derive(cfg.seed, 1));
    let data = RowMatrix::vstack(&[&pos, &neg])?;
    let labels: Vec<bool> = (0..data.rows()).map(|i| i < pos.rows()).collect();
    let n = data.rows();

    let hp = cfg.adam();
    let mut ws = Workspace::default();
    let mut grad = vec![0.0; clf.num_parameters()];
    let mut batch = Vec::with_capacity(cfg.batch_size * d);
    let mut batch_labels = Vec::with_capacity(cfg.batch_size);
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let mut rng = seed::rng(seed::derive(cfg.seed, 1000 + epoch as u64));
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            batch_labels.clear();
            for &i in chunk {
                batch.extend_from_slice(data.row(i));
                batch_labels.push(labels[i]);
            }
            let loss = clf.bce_step(&batch, &batch_labels, cfg.l2_coefficient, &mut ws, &mut grad);
            if !loss.is_finite() {
                return Err(Error::TrainingDiverged {
                    epoch,
                    detail: format!("loss became {loss}"),
                });
            }
            let (params, adam) = clf.params_and_adam();
            adam.update(params, &grad, hp);
            total += loss;
            batches += 1;
        }
        ensure_finite(clf, epoch)?;
        history.push(total / batches as f64);
    }
    Ok(history)
}

/// Train a fresh classifier separating `pos` (label 1) from `neg` (label 0).
///
/// The larger class is subsampled so both classes are equally represented.
/// Deterministic given `cfg.seed`.
pub fn train_binary_classifier(
    pos: &RowMatrix,
    neg: &RowMatrix,
    arch: &MlpArchitecture,
    cfg: &TrainConfig,
) -> Result<MlpClassifier> {
    let mut clf = MlpClassifier::new(arch.clone(), seed::derive(cfg.seed, 0))?;
    fit_classifier(&mut clf, pos, neg, cfg)?;
    Ok(clf)
}

/// `mean_p f − mean_q exp(f − 1)` for critic outputs on the two samples.
pub fn f_bound(f_pos: &[f64], f_neg: &[f64]) -> Result<f64> {
    if f_pos.is_empty() || f_neg.is_empty() {
        return Err(Error::Empty("f-bound sample"));
    }
    let a = f_pos.iter().sum::<f64>() / f_pos.len() as f64;
    let b = f_neg.iter().map(|f| (f - 1.0).exp()).sum::<f64>() / f_neg.len() as f64;
    Ok(a - b)
}

/// Fit an unconstrained critic `f` maximizing `E_p[f] − E_q[exp(f − 1)]`.
/// Returns the mean minibatch objective of every epoch.
pub fn fit_f_mine_critic(
    critic: &mut MlpClassifier,
    pos: &RowMatrix,
    neg: &RowMatrix,
    cfg: &TrainConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let d = critic.architecture().input_dim();
    check_classes(pos, neg, d)?;
    let (pos, neg) = balance(pos, neg, seed::derive(cfg.seed, 1));
    let m = pos.rows();

    let hp = cfg.adam();
    let mut ws = Workspace::default();
    let mut grad = vec![0.0; critic.num_parameters()];
    let mut batch = Vec::with_capacity(2 * cfg.batch_size * d);
    let mut dlogits = Vec::with_capacity(2 * cfg.batch_size);
    let mut order_p: Vec<usize> = (0..m).collect();
    let mut order_q: Vec<usize> = (0..m).collect();
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let mut rng = seed::rng(seed::derive(cfg.seed, 1000 + epoch as u64));
        order_p.shuffle(&mut rng);
        order_q.shuffle(&mut rng);
        let mut total = 0.0;
        let mut batches = 0usize;
        for (cp, cq) in order_p
            .chunks(cfg.batch_size)
            .zip(order_q.chunks(cfg.batch_size))
        {
            let b = cp.len();
            batch.clear();
            for &i in cp {
                batch.extend_from_slice(pos.row(i));
            }
            for &j in cq {
                batch.extend_from_slice(neg.row(j));
            }
            let f = critic.forward_batch(&batch, 2 * b, &mut ws);
            let inv_b = 1.0 / b as f64;
            let mut obj = 0.0;
            dlogits.clear();
            for &fp in &f[..b] {
                obj += fp * inv_b;
                dlogits.push(-inv_b);
            }
            for &fq in &f[b..] {
                let e = (fq - 1.0).exp();
                obj -= e * inv_b;
                dlogits.push(e * inv_b);
            }
            if !obj.is_finite() {
                return Err(Error::TrainingDiverged {
                    epoch,
                    detail: format!("f-bound objective became {obj}"),
                });
            }
            grad.iter_mut().for_each(|g| *g = 0.0);
            critic.backward_batch(&dlogits, &mut ws, &mut grad);
            if cfg.l2_coefficient > 0.0 {
                for ((g, &p), &w) in grad
                    .iter_mut()
                    .zip(critic.parameters())
                    .zip(critic.weight_mask())
                {
                    if w {
                        *g += 2.0 * cfg.l2_coefficient * p;
                    }
                }
            }
            let (params, adam) = critic.params_and_adam();
            adam.update(params, &grad, hp);
            total += obj;
            batches += 1;
        }
        ensure_finite(critic, epoch)?;
        history.push(total / batches as f64);
    }
    Ok(history)
}

/// Train a fresh f-MINE critic. Use [`MlpArchitecture::new`]`(d, vec![64])`
/// for the standard single hidden layer.
pub fn train_f_mine_critic(
    pos: &RowMatrix,
    neg: &RowMatrix,
    arch: &MlpArchitecture,
    cfg: &TrainConfig,
) -> Result<MlpClassifier> {
    let mut critic = MlpClassifier::new(arch.clone(), seed::derive(cfg.seed, 0))?;
    fit_f_mine_critic(&mut critic, pos, neg, cfg)?;
    Ok(critic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian_rows(n: usize, d: usize, mean: f64, seed: u64) -> RowMatrix {
        let mut rng = seed::rng(seed);
        let data: Vec<f64> = (0..n * d)
            .map(|_| mean + Distribution::<f64>::sample(&StandardNormal, &mut rng))
            .collect::<Vec<f64>>();
        RowMatrix::new(n, d, data).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let mut c = TrainConfig::default();
        c.adam_beta1 = 1.0;
        assert!(c.validate().is_err());
        let mut c = TrainConfig::default();
        c.batch_size = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn rejects_bad_inputs() {
        let arch = MlpArchitecture::new(2, vec![4]).unwrap();
        let cfg = TrainConfig::default();
        let a = gaussian_rows(10, 2, 0.0, 1);
        let empty = RowMatrix::zeros(0, 2);
        assert!(train_binary_classifier(&a, &empty, &arch, &cfg).is_err());
        let wrong = gaussian_rows(10, 3, 0.0, 2);
        assert!(train_binary_classifier(&a, &wrong, &arch, &cfg).is_err());
    }

    #[test]
    fn divergence_is_reported() {
        let arch = MlpArchitecture::new(1, vec![4]).unwrap();
        let cfg = TrainConfig {
            learning_rate: 1e200,
            epochs: 3,
            ..TrainConfig::default()
        };
        let a = gaussian_rows(64, 1, 1e150, 1);
        let b = gaussian_rows(64, 1, -1e150, 2);
        let err = train_binary_classifier(&a, &b, &arch, &cfg).unwrap_err();
        assert!(matches!(err, Error::TrainingDiverged { .. }), "{err}");
    }

    #[test]
    fn unequal_classes_are_balanced() {
        let a = gaussian_rows(30, 2, 0.0, 1);
        let b = gaussian_rows(12, 2, 0.0, 2);
        let (p, q) = balance(&a, &b, 5);
        assert_eq!(p.rows(), 12);
        assert_eq!(q.rows(), 12);
        assert_eq!(q, b);
    }

    #[test]
    fn f_bound_of_constant_critic() {
        // f ≡ c gives c − exp(c − 1), maximized at c = 1 with value 0
        for c in [-1.0f64, 0.0, 0.5, 1.0, 2.0] {
            let v = f_bound(&[c; 5], &[c; 7]).unwrap();
            assert!((v - (c - (c - 1.0).exp())).abs() < 1e-15);
            assert!(v <= 1e-15);
        }
        assert_eq!(f_bound(&[1.0], &[1.0]).unwrap(), 0.0);
    }
}
