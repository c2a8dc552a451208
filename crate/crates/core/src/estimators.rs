//! MI and CMI estimators built on a two-sample divergence estimator.
//!
//! - [`classifier_mi`]: `I(X; Y) = D(p(x, y) ‖ p(x) p(y))`, with the product
//!   sample formed by deranging `y` against `x`.
//! - [`mi_diff_cmi`] (CCMI): `I(X; Y | Z) = I(X; Y, Z) − I(X; Z)`.
//! - [`generator_classifier_cmi`]: `D(p(x, y, z) ‖ p(x, z) g(y | z))` with a
//!   conditional sampler `g` fit on a disjoint half of the data.
//! - [`bias_corrected_cmi`]: the same divergence minus
//!   `D(p(y, z) ‖ p(z) g(y | z))`, which cancels the error due to `g ≠ p(y|z)`.

use serde::{Deserialize, Serialize};

use crate::dataset::{Block, SampleSet};
use crate::divergence::{DivergenceConfig, DivergenceEstimate, DivergenceEstimator, FMineConfig};
use crate::error::{Error, Result};
use crate::knn::{knn_conditional_sample, DEFAULT_GENERATOR_K};
use crate::matrix::RowMatrix;
use crate::seed;

/// The divergence estimator plugged into every MI/CMI estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DivergenceBackend {
    Classifier(DivergenceConfig),
    FMine(FMineConfig),
}

impl Default for DivergenceBackend {
    fn default() -> Self {
        DivergenceBackend::Classifier(DivergenceConfig::default())
    }
}

impl DivergenceEstimator for DivergenceBackend {
    fn estimate(&self, dp: &RowMatrix, dq: &RowMatrix, seed: u64) -> Result<DivergenceEstimate> {
        match self {
            DivergenceBackend::Classifier(c) => c.estimate(dp, dq, seed),
            DivergenceBackend::FMine(c) => c.estimate(dp, dq, seed),
        }
    }
}

/// Conditional sampler used by the generator-based estimators.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeneratorKind {
    KnnPermutation { k: usize },
    #[default]
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    /// Outer bootstrap rounds (B).
    pub bootstrap: usize,
    pub divergence: DivergenceBackend,
    pub generator: GeneratorKind,
    /// Report `max(0, value)` instead of the raw estimate.
    pub truncate_negative: bool,
    pub seed: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self::ccmi()
    }
}

impl EstimatorConfig {
    /// MI-Diff with the classifier divergence, B = 1.
    pub fn ccmi() -> Self {
        Self {
            bootstrap: 1,
            divergence: DivergenceBackend::default(),
            generator: GeneratorKind::None,
            truncate_negative: false,
            seed: 0,
        }
    }

    /// Generator + classifier with the kNN-permutation sampler, B = 10.
    pub fn generator_classifier() -> Self {
        Self {
            bootstrap: 10,
            generator: GeneratorKind::KnnPermutation {
                k: DEFAULT_GENERATOR_K,
            },
            ..Self::ccmi()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Mutable access to the classifier divergence settings, if that is the backend.
    pub fn classifier_mut(&mut self) -> Option<&mut DivergenceConfig> {
        match &mut self.divergence {
            DivergenceBackend::Classifier(c) => Some(c),
            DivergenceBackend::FMine(_) => None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.bootstrap == 0 {
            return Err(Error::InvalidConfig("bootstrap must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// An MI or CMI estimate in nats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmiEstimate {
    pub value: f64,
    /// MI-Diff: `(I(X;YZ), I(X;Z))`. Bias correction: the triple and pair
    /// divergences. Without truncation `value = components.0 − components.1`.
    pub components: Option<(f64, f64)>,
    pub per_bootstrap: Vec<f64>,
    /// Whether `value` was raised to 0 by `truncate_negative`.
    pub truncated: bool,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub divergences: Vec<DivergenceEstimate>,
}

impl CmiEstimate {
    fn finish(mut self, truncate: bool) -> Self {
        if truncate && self.value < 0.0 {
            self.value = 0.0;
            self.truncated = true;
        }
        self
    }

    /// Sample standard deviation of the per-bootstrap values (0 for B = 1).
    pub fn bootstrap_std(&self) -> f64 {
        let n = self.per_bootstrap.len();
        if n < 2 {
            return 0.0;
        }
        let m = mean(&self.per_bootstrap);
        (self.per_bootstrap.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Classifier two-sample estimate of `I(X; Y)`.
pub fn classifier_mi(x: &RowMatrix, y: &RowMatrix, cfg: &EstimatorConfig) -> Result<CmiEstimate> {
    cfg.validate()?;
    if x.rows() != y.rows() {
        return Err(Error::DimensionMismatch {
            expected: x.rows(),
            got: y.rows(),
        });
    }
    if x.rows() < 4 {
        return Err(Error::TooFewSamples {
            needed: 4,
            got: x.rows(),
        });
    }
    let pair = SampleSet::unconditional(x.clone(), y.clone())?;
    let dp = pair.project(&[Block::X, Block::Y])?;
    let mut per_bootstrap = Vec::with_capacity(cfg.bootstrap);
    let mut divergences = Vec::with_capacity(cfg.bootstrap);
    for b in 0..cfg.bootstrap {
        let sb = seed::derive(cfg.seed, b as u64);
        let product = pair.product_shuffle(seed::derive(sb, 0))?;
        let dq = product.project(&[Block::X, Block::Y])?;
        let est = cfg.divergence.estimate(&dp, &dq, seed::derive(sb, 1))?;
        per_bootstrap.push(est.value);
        divergences.push(est);
    }
    Ok(CmiEstimate {
        value: mean(&per_bootstrap),
        components: None,
        per_bootstrap,
        truncated: false,
        divergences,
    }
    .finish(cfg.truncate_negative))
}

/// CCMI: `I(X; Y, Z) − I(X; Z)`, each term from [`classifier_mi`] with an
/// independent derived seed. With `d_z = 0` this is exactly `classifier_mi(X, Y)`.
pub fn mi_diff_cmi(d: &SampleSet, cfg: &EstimatorConfig) -> Result<CmiEstimate> {
    if d.dims().2 == 0 {
        return classifier_mi(d.x(), d.y(), cfg);
    }
    let raw = EstimatorConfig {
        truncate_negative: false,
        ..cfg.clone()
    };
    let yz = d.project(&[Block::Y, Block::Z])?;
    let full = classifier_mi(d.x(), &yz, &raw.clone().with_seed(seed::derive(cfg.seed, 0x11)))?;
    let marginal = classifier_mi(d.x(), d.z(), &raw.with_seed(seed::derive(cfg.seed, 0x22)))?;
    let per_bootstrap = full
        .per_bootstrap
        .iter()
        .zip(&marginal.per_bootstrap)
        .map(|(a, b)| a - b)
        .collect();
    let mut divergences = full.divergences;
    divergences.extend(marginal.divergences);
    Ok(CmiEstimate {
        value: full.value - marginal.value,
        components: Some((full.value, marginal.value)),
        per_bootstrap,
        truncated: false,
        divergences,
    }
    .finish(cfg.truncate_negative))
}

/// Draws `y′ ~ g(y | z)` for target `z` values from a pool of `(x, y, z)` samples.
pub trait ConditionalSampler {
    fn sample(&self, pool: &SampleSet, target_z: &RowMatrix, seed: u64) -> Result<RowMatrix>;
}

/// The kNN-permutation sampler: `y` of a uniformly chosen one of the `k`
/// nearest pool points in `z`.
#[derive(Debug, Clone, Copy)]
pub struct KnnPermutation {
    pub k: usize,
}

impl ConditionalSampler for KnnPermutation {
    fn sample(&self, pool: &SampleSet, target_z: &RowMatrix, seed: u64) -> Result<RowMatrix> {
        knn_conditional_sample(pool, target_z, self.k, seed)
    }
}

fn configured_sampler(cfg: &EstimatorConfig) -> Result<KnnPermutation> {
    match cfg.generator {
        GeneratorKind::KnnPermutation { k } => Ok(KnnPermutation { k }),
        GeneratorKind::None => Err(Error::InvalidConfig(
            "generator estimators need generator = knn-permutation".into(),
        )),
    }
}

fn check_generator_input(d: &SampleSet, cfg: &EstimatorConfig) -> Result<()> {
    cfg.validate()?;
    if d.dims().2 == 0 {
        return Err(Error::InvalidConfig("generator estimators need a z block".into()));
    }
    if d.n() < 8 {
        return Err(Error::TooFewSamples { needed: 8, got: d.n() });
    }
    Ok(())
}

/// One bootstrap round: split, sample `y′` for the classification half from
/// the generator half, and return `(joint half, y′)`.
fn generated_round(
    d: &SampleSet,
    sampler: &dyn ConditionalSampler,
    sb: u64,
) -> Result<(SampleSet, RowMatrix)> {
    let split = d.split_half(seed::derive(sb, 0))?;
    let joint = split.train;
    let y_gen = sampler.sample(&split.eval, joint.z(), seed::derive(sb, 1))?;
    if y_gen.rows() != joint.n() || y_gen.cols() != joint.dims().1 {
        return Err(Error::DimensionMismatch {
            expected: joint.n() * joint.dims().1,
            got: y_gen.rows() * y_gen.cols(),
        });
    }
    Ok((joint, y_gen))
}

/// Generator + classifier CMI with the configured kNN-permutation sampler.
pub fn generator_classifier_cmi(d: &SampleSet, cfg: &EstimatorConfig) -> Result<CmiEstimate> {
    let sampler = configured_sampler(cfg)?;
    generator_classifier_cmi_with(d, cfg, &sampler)
}

/// Generator + classifier CMI with an arbitrary conditional sampler.
pub fn generator_classifier_cmi_with(
    d: &SampleSet,
    cfg: &EstimatorConfig,
    sampler: &dyn ConditionalSampler,
) -> Result<CmiEstimate> {
    check_generator_input(d, cfg)?;
    let mut per_bootstrap = Vec::with_capacity(cfg.bootstrap);
    let mut divergences = Vec::with_capacity(cfg.bootstrap);
    for b in 0..cfg.bootstrap {
        let sb = seed::derive(cfg.seed, b as u64);
        let (joint, y_gen) = generated_round(d, sampler, sb)?;
        let dp = joint.project(&[Block::X, Block::Y, Block::Z])?;
        let dq = RowMatrix::hstack(&[joint.x(), &y_gen, joint.z()])?;
        let est = cfg.divergence.estimate(&dp, &dq, seed::derive(sb, 2))?;
        per_bootstrap.push(est.value);
        divergences.push(est);
    }
    Ok(CmiEstimate {
        value: mean(&per_bootstrap),
        components: None,
        per_bootstrap,
        truncated: false,
        divergences,
    }
    .finish(cfg.truncate_negative))
}

/// Bias-corrected generator CMI with the configured kNN-permutation sampler.
pub fn bias_corrected_cmi(d: &SampleSet, cfg: &EstimatorConfig) -> Result<CmiEstimate> {
    let sampler = configured_sampler(cfg)?;
    bias_corrected_cmi_with(d, cfg, &sampler)
}

/// `D(p(x,y,z) ‖ p(x,z) g) − D(p(y,z) ‖ p(z) g)`, both against the same `g` samples.
pub fn bias_corrected_cmi_with(
    d: &SampleSet,
    cfg: &EstimatorConfig,
    sampler: &dyn ConditionalSampler,
) -> Result<CmiEstimate> {
    check_generator_input(d, cfg)?;
    let mut triples = Vec::with_capacity(cfg.bootstrap);
    let mut pairs = Vec::with_capacity(cfg.bootstrap);
    let mut divergences = Vec::with_capacity(2 * cfg.bootstrap);
    for b in 0..cfg.bootstrap {
        let sb = seed::derive(cfg.seed, b as u64);
        let (joint, y_gen) = generated_round(d, sampler, sb)?;
        let dp = joint.project(&[Block::X, Block::Y, Block::Z])?;
        let dq = RowMatrix::hstack(&[joint.x(), &y_gen, joint.z()])?;
        let triple = cfg.divergence.estimate(&dp, &dq, seed::derive(sb, 2))?;
        let dp = joint.project(&[Block::Y, Block::Z])?;
        let dq = RowMatrix::hstack(&[&y_gen, joint.z()])?;
        let pair = cfg.divergence.estimate(&dp, &dq, seed::derive(sb, 3))?;
        triples.push(triple.value);
        pairs.push(pair.value);
        divergences.push(triple);
        divergences.push(pair);
    }
    let (t, p) = (mean(&triples), mean(&pairs));
    Ok(CmiEstimate {
        value: t - p,
        components: Some((t, p)),
        per_bootstrap: triples.iter().zip(&pairs).map(|(a, b)| a - b).collect(),
        truncated: false,
        divergences,
    }
    .finish(cfg.truncate_negative))
}

/// Run `estimate` for every candidate and keep the largest value. The DV
/// objective is a lower bound, so the maximum is the least-biased choice.
/// Failing candidates are skipped; it is an error only if all fail.
pub fn hyperparam_select<F>(
    candidates: &[EstimatorConfig],
    mut estimate: F,
) -> Result<(EstimatorConfig, CmiEstimate)>
where
    F: FnMut(&EstimatorConfig) -> Result<CmiEstimate>,
{
    if candidates.is_empty() {
        return Err(Error::Empty("candidate configurations"));
    }
    let mut best: Option<(usize, CmiEstimate)> = None;
    for (i, c) in candidates.iter().enumerate() {
        let Ok(est) = estimate(c) else { continue };
        if !est.value.is_finite() {
            continue;
        }
        if best.as_ref().is_none_or(|(_, b)| est.value > b.value) {
            best = Some((i, est));
        }
    }
    best.map(|(i, e)| (candidates[i].clone(), e))
        .ok_or(Error::AllCandidatesFailed(candidates.len()))
}
