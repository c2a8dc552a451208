//! Two-sample KL-divergence estimation.
//!
//! [`classifier_dkl`] trains a classifier to tell samples of `p` (label 1)
//! from samples of `q` (label 0), turns held-out predictions γ into
//! likelihood ratios γ / (1 − γ), and evaluates the Donsker–Varadhan objective
//!
//! ```text
//! D̂(p‖q) = mean_p log L(u) − log mean_q L(v)
//! ```
//!
//! on them ([`dv_plugin`]). Predictions are clipped to `[τ, 1 − τ]` before the
//! ratios are formed, which caps any single log ratio at `logit(1 − τ)`.
//!
//! [`f_mine_dkl`] is the f-MINE baseline: an unconstrained critic trained to
//! maximize `E_p[f] − E_q[exp(f − 1)]`, evaluated on held-out halves.

use serde::{Deserialize, Serialize};

use crate::cit::ReliabilityCurve;
use crate::dataset::split_rows;
use crate::error::{Error, Result};
use crate::matrix::{RowMatrix, Standardizer};
use crate::nn::{self, MlpArchitecture, TrainConfig};
use crate::seed;

pub const DEFAULT_CLIP: f64 = 1e-3;
pub const DEFAULT_INNER_ITERATIONS: usize = 2;

/// Which classifier family the two-sample test uses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ClassifierKind {
    /// ReLU MLP with the given hidden layer widths.
    Mlp { hidden: Vec<usize> },
    /// Bias-free logistic regression on the raw features.
    Logistic,
}

impl Default for ClassifierKind {
    fn default() -> Self {
        ClassifierKind::Mlp {
            hidden: vec![64, 64],
        }
    }
}

impl ClassifierKind {
    pub fn architecture(&self, input_dim: usize) -> Result<MlpArchitecture> {
        match self {
            ClassifierKind::Mlp { hidden } => MlpArchitecture::new(input_dim, hidden.clone()),
            ClassifierKind::Logistic => MlpArchitecture::logistic(input_dim),
        }
    }
}

/// Settings of the classifier-based divergence estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DivergenceConfig {
    /// Number of independent split/train/evaluate rounds averaged (T).
    pub inner_iterations: usize,
    /// Clipping constant τ ∈ (0, 0.5).
    pub clip: f64,
    pub classifier: ClassifierKind,
    /// `train.seed` is ignored; per-round seeds derive from `seed`.
    pub train: TrainConfig,
    /// Collect a reliability curve with this many bins over the held-out predictions.
    pub calibration_bins: Option<usize>,
    /// Standardize every column with the training halves' mean and spread
    /// before training and evaluation.
    pub standardize: bool,
    pub seed: u64,
}

impl Default for DivergenceConfig {
    fn default() -> Self {
        Self {
            inner_iterations: DEFAULT_INNER_ITERATIONS,
            clip: DEFAULT_CLIP,
            classifier: ClassifierKind::default(),
            train: TrainConfig::default(),
            calibration_bins: None,
            standardize: true,
            seed: 0,
        }
    }
}

impl DivergenceConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.inner_iterations == 0 {
            return Err(Error::InvalidConfig("inner_iterations must be ≥ 1".into()));
        }
        if !(self.clip > 0.0 && self.clip < 0.5) {
            return Err(Error::InvalidConfig(format!(
                "clip must lie in (0, 0.5), got {}",
                self.clip
            )));
        }
        if let Some(0) = self.calibration_bins {
            return Err(Error::InvalidConfig("calibration_bins must be ≥ 1".into()));
        }
        self.train.validate()
    }
}

/// Settings of the f-MINE divergence baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FMineConfig {
    pub inner_iterations: usize,
    pub hidden: Vec<usize>,
    pub train: TrainConfig,
    pub standardize: bool,
    pub seed: u64,
}

impl Default for FMineConfig {
    fn default() -> Self {
        Self {
            inner_iterations: 1,
            hidden: vec![64],
            train: TrainConfig::f_mine(),
            standardize: true,
            seed: 0,
        }
    }
}

impl FMineConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// A KL-divergence estimate in nats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceEstimate {
    /// Mean of `per_iteration`.
    pub value: f64,
    pub per_iteration: Vec<f64>,
    /// Held-out accuracy averaged over rounds (classifier estimator only).
    pub mean_eval_accuracy: Option<f64>,
    pub calibration: Option<ReliabilityCurve>,
}

/// Anything that estimates `D_KL(p‖q)` from two samples.
pub trait DivergenceEstimator {
    fn estimate(&self, dp: &RowMatrix, dq: &RowMatrix, seed: u64) -> Result<DivergenceEstimate>;
}

impl DivergenceEstimator for DivergenceConfig {
    fn estimate(&self, dp: &RowMatrix, dq: &RowMatrix, seed: u64) -> Result<DivergenceEstimate> {
        classifier_dkl(dp, dq, &self.clone().with_seed(seed))
    }
}

impl DivergenceEstimator for FMineConfig {
    fn estimate(&self, dp: &RowMatrix, dq: &RowMatrix, seed: u64) -> Result<DivergenceEstimate> {
        f_mine_dkl(dp, dq, &self.clone().with_seed(seed))
    }
}

/// `mean(log_p) − log mean(exp(log_q))` for point-wise log likelihood ratios.
pub fn dv_from_log_ratios(log_ratios_p: &[f64], log_ratios_q: &[f64]) -> Result<f64> {
    if log_ratios_p.is_empty() || log_ratios_q.is_empty() {
        return Err(Error::Empty("dv_plugin sample"));
    }
    let first = log_ratios_p.iter().sum::<f64>() / log_ratios_p.len() as f64;
    let max = log_ratios_q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() || !first.is_finite() {
        return Err(Error::NonFinite("log likelihood ratio".into()));
    }
    let mean_exp =
        log_ratios_q.iter().map(|&l| (l - max).exp()).sum::<f64>() / log_ratios_q.len() as f64;
    Ok(first - (max + mean_exp.ln()))
}

/// Donsker–Varadhan plug-in from classifier probabilities, clipped to `[τ, 1 − τ]`.
pub fn dv_plugin(probs_p: &[f64], probs_q: &[f64], clip: f64) -> Result<f64> {
    if !(clip > 0.0 && clip < 0.5) {
        return Err(Error::InvalidConfig(format!("clip must lie in (0, 0.5), got {clip}")));
    }
    let log_ratio = |g: f64| -> Result<f64> {
        if !(0.0..=1.0).contains(&g) {
            return Err(Error::Domain(format!("probability {g} outside [0, 1]")));
        }
        let g = g.clamp(clip, 1.0 - clip);
        Ok((g / (1.0 - g)).ln())
    };
    let lp = probs_p.iter().map(|&g| log_ratio(g)).collect::<Result<Vec<_>>>()?;
    let lq = probs_q.iter().map(|&g| log_ratio(g)).collect::<Result<Vec<_>>>()?;
    dv_from_log_ratios(&lp, &lq)
}

/// Train/eval halves of both samples, optionally standardized with the
/// statistics of the pooled training halves.
fn split_pair(dp: &RowMatrix, dq: &RowMatrix, round: u64, standardize: bool) -> Result<[RowMatrix; 4]> {
    let (p_train, p_eval) = split_rows(dp, seed::derive(round, 1))?;
    let (q_train, q_eval) = split_rows(dq, seed::derive(round, 2))?;
    let mut parts = [p_train, p_eval, q_train, q_eval];
    if standardize {
        let s = Standardizer::fit(&[&parts[0], &parts[2]]);
        parts = parts.map(|m| s.apply(&m));
    }
    Ok(parts)
}

/// Classifier two-sample estimate of `D_KL(p‖q)` from samples `dp ~ p`, `dq ~ q`.
pub fn classifier_dkl(dp: &RowMatrix, dq: &RowMatrix, cfg: &DivergenceConfig) -> Result<DivergenceEstimate> {
    cfg.validate()?;
    if dp.cols() != dq.cols() {
        return Err(Error::DimensionMismatch {
            expected: dp.cols(),
            got: dq.cols(),
        });
    }
    for (m, what) in [(dp, "p sample"), (dq, "q sample")] {
        if m.rows() < 2 {
            return Err(Error::TooFewSamples {
                needed: 2,
                got: m.rows(),
            });
        }
        if m.cols() == 0 {
            return Err(Error::Empty(what));
        }
    }
    let arch = cfg.classifier.architecture(dp.cols())?;
    let mut per_iteration = Vec::with_capacity(cfg.inner_iterations);
    let mut accuracy = 0.0;
    let mut cal_preds = Vec::new();
    let mut cal_labels = Vec::new();

    for t in 0..cfg.inner_iterations {
        let round = seed::derive(cfg.seed, t as u64);
        let [p_train, p_eval, q_train, q_eval] = split_pair(dp, dq, round, cfg.standardize)?;
        let train = cfg.train.clone().with_seed(seed::derive(round, 3));
        let clf = nn::train_binary_classifier(&p_train, &q_train, &arch, &train)?;
        let gp = clf.predict_proba_rows(&p_eval)?;
        let gq = clf.predict_proba_rows(&q_eval)?;
        let d = dv_plugin(&gp, &gq, cfg.clip)?;
        per_iteration.push(d);
        let correct = gp.iter().filter(|&&g| g > 0.5).count() + gq.iter().filter(|&&g| g < 0.5).count();
        accuracy += correct as f64 / (gp.len() + gq.len()) as f64;
        if cfg.calibration_bins.is_some() {
            cal_labels.extend(std::iter::repeat_n(true, gp.len()));
            cal_labels.extend(std::iter::repeat_n(false, gq.len()));
            cal_preds.extend(gp);
            cal_preds.extend(gq);
        }
    }
    let calibration = match cfg.calibration_bins {
        Some(bins) => Some(ReliabilityCurve::from_predictions(&cal_preds, &cal_labels, bins)?),
        None => None,
    };
    Ok(DivergenceEstimate {
        value: per_iteration.iter().sum::<f64>() / per_iteration.len() as f64,
        mean_eval_accuracy: Some(accuracy / cfg.inner_iterations as f64),
        per_iteration,
        calibration,
    })
}

/// f-MINE estimate of `D_KL(p‖q)`: the f-divergence lower bound of a trained
/// critic, evaluated on held-out halves.
pub fn f_mine_dkl(dp: &RowMatrix, dq: &RowMatrix, cfg: &FMineConfig) -> Result<DivergenceEstimate> {
    if cfg.inner_iterations == 0 {
        return Err(Error::InvalidConfig("inner_iterations must be ≥ 1".into()));
    }
    if dp.cols() != dq.cols() {
        return Err(Error::DimensionMismatch {
            expected: dp.cols(),
            got: dq.cols(),
        });
    }
    let arch = MlpArchitecture::new(dp.cols(), cfg.hidden.clone())?;
    let mut per_iteration = Vec::with_capacity(cfg.inner_iterations);
    for t in 0..cfg.inner_iterations {
        let round = seed::derive(cfg.seed, t as u64);
        let [p_train, p_eval, q_train, q_eval] = split_pair(dp, dq, round, cfg.standardize)?;
        let train = cfg.train.clone().with_seed(seed::derive(round, 3));
        let critic = nn::train_f_mine_critic(&p_train, &q_train, &arch, &train)?;
        let v = nn::f_bound(&critic.logits(&p_eval)?, &critic.logits(&q_eval)?)?;
        if !v.is_finite() {
            return Err(Error::TrainingDiverged {
                epoch: cfg.train.epochs,
                detail: format!("held-out f-bound is {v}"),
            });
        }
        per_iteration.push(v);
    }
    Ok(DivergenceEstimate {
        value: per_iteration.iter().sum::<f64>() / per_iteration.len() as f64,
        per_iteration,
        mean_eval_accuracy: None,
        calibration: None,
    })
}
