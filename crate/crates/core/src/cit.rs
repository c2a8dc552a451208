//! Conditional independence testing harness.
//!
//! Each dataset is scored by its CMI estimate; a dataset is called dependent
//! when the score exceeds a threshold (0 by default). Ranking quality is
//! reported as AuROC.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{ModelKind, ModelSpec};
use crate::error::{Error, Result};
use crate::estimators::{mi_diff_cmi, EstimatorConfig};
use crate::matrix::RowMatrix;
use crate::nn::MlpClassifier;
use crate::seed;

pub const DEFAULT_BINS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CiLabel {
    Independent,
    Dependent,
}

impl CiLabel {
    pub fn is_dependent(self) -> bool {
        self == CiLabel::Dependent
    }

    /// 1 for dependent, 0 for conditionally independent.
    pub fn as_int(self) -> u8 {
        u8::from(self.is_dependent())
    }

    pub fn flipped(self) -> Self {
        match self {
            CiLabel::Independent => CiLabel::Dependent,
            CiLabel::Dependent => CiLabel::Independent,
        }
    }
}

/// Area under the ROC curve: the probability that a random dependent dataset
/// scores above a random independent one, ties counting half.
pub fn auroc(scores: &[f64], labels: &[CiLabel]) -> Result<f64> {
    check_scores(scores, labels)?;
    let pos: Vec<f64> = filter(scores, labels, CiLabel::Dependent);
    let neg: Vec<f64> = filter(scores, labels, CiLabel::Independent);
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::SingleClass("auroc"));
    }
    // rank-sum form: sort once, average ranks over ties
    let mut all: Vec<(f64, bool)> = pos
        .iter()
        .map(|&s| (s, true))
        .chain(neg.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        let mid_rank = (i + 1 + j) as f64 / 2.0;
        rank_sum += mid_rank * all[i..j].iter().filter(|e| e.1).count() as f64;
        i = j;
    }
    let (np, nn) = (pos.len() as f64, neg.len() as f64);
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * nn))
}

fn filter(scores: &[f64], labels: &[CiLabel], want: CiLabel) -> Vec<f64> {
    scores
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l == want)
        .map(|(&s, _)| s)
        .collect()
}

fn check_scores(scores: &[f64], labels: &[CiLabel]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            got: labels.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("scores".into()));
    }
    Ok(())
}

/// Precision and recall of "dependent" predictions `score > threshold`.
/// Precision is `None` when nothing is predicted dependent.
pub fn precision_recall_at(scores: &[f64], labels: &[CiLabel], threshold: f64) -> Result<(Option<f64>, f64)> {
    check_scores(scores, labels)?;
    let positives = labels.iter().filter(|l| l.is_dependent()).count();
    if positives == 0 {
        return Err(Error::SingleClass("recall needs at least one dependent label"));
    }
    let (mut tp, mut predicted) = (0usize, 0usize);
    for (&s, &l) in scores.iter().zip(labels) {
        if s > threshold {
            predicted += 1;
            tp += usize::from(l.is_dependent());
        }
    }
    let precision = (predicted > 0).then(|| tp as f64 / predicted as f64);
    Ok((precision, tp as f64 / positives as f64))
}

/// Binned predicted probability vs empirical positive frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityCurve {
    /// `bins + 1` equal-width edges over [0, 1].
    pub edges: Vec<f64>,
    /// `None` for empty bins.
    pub mean_predicted: Vec<Option<f64>>,
    pub empirical_fraction: Vec<Option<f64>>,
    pub counts: Vec<usize>,
}

impl ReliabilityCurve {
    pub fn from_predictions(predictions: &[f64], labels: &[bool], bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidConfig("calibration needs at least one bin".into()));
        }
        if predictions.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: predictions.len(),
                got: labels.len(),
            });
        }
        if predictions.is_empty() {
            return Err(Error::Empty("calibration set"));
        }
        if predictions.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Domain("predictions must lie in [0, 1]".into()));
        }
        let mut sum_p = vec![0.0; bins];
        let mut sum_y = vec![0.0; bins];
        let mut counts = vec![0usize; bins];
        for (&p, &y) in predictions.iter().zip(labels) {
            let b = ((p * bins as f64) as usize).min(bins - 1);
            sum_p[b] += p;
            sum_y[b] += f64::from(u8::from(y));
            counts[b] += 1;
        }
        let avg = |s: &[f64]| -> Vec<Option<f64>> {
            s.iter()
                .zip(&counts)
                .map(|(&v, &c)| (c > 0).then(|| v / c as f64))
                .collect()
        };
        Ok(Self {
            edges: (0..=bins).map(|i| i as f64 / bins as f64).collect(),
            mean_predicted: avg(&sum_p),
            empirical_fraction: avg(&sum_y),
            counts,
        })
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Largest `|mean predicted − empirical fraction|` over occupied bins.
    pub fn max_gap(&self) -> f64 {
        self.mean_predicted
            .iter()
            .zip(&self.empirical_fraction)
            .filter_map(|(p, e)| Some((p.as_ref()? - e.as_ref()?).abs()))
            .fold(0.0, f64::max)
    }

    /// Count-weighted mean absolute gap.
    pub fn expected_calibration_error(&self) -> f64 {
        let total = self.total() as f64;
        self.mean_predicted
            .iter()
            .zip(&self.empirical_fraction)
            .zip(&self.counts)
            .filter_map(|((p, e), &c)| Some((p.as_ref()? - e.as_ref()?).abs() * c as f64))
            .sum::<f64>()
            / total
    }
}

/// Calibration of a trained classifier on labelled evaluation rows.
pub fn reliability_curve(
    classifier: &MlpClassifier,
    eval_rows: &RowMatrix,
    eval_labels: &[bool],
    bins: usize,
) -> Result<ReliabilityCurve> {
    let probs = classifier.predict_proba_rows(eval_rows)?;
    ReliabilityCurve::from_predictions(&probs, eval_labels, bins)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CitResult {
    pub dataset_id: usize,
    pub label: CiLabel,
    pub cmi_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CitMetrics {
    pub auroc: f64,
    pub threshold: f64,
    /// `None` when no dataset scored above the threshold.
    pub precision: Option<f64>,
    pub recall: f64,
    pub datasets: usize,
    pub dependent: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CitBenchmark {
    pub specs: Vec<ModelSpec>,
    pub estimator: EstimatorConfig,
    pub master_seed: u64,
    pub results: Vec<CitResult>,
    pub metrics: CitMetrics,
}

impl CitBenchmark {
    pub fn scores(&self) -> Vec<f64> {
        self.results.iter().map(|r| r.cmi_score).collect()
    }

    pub fn labels(&self) -> Vec<CiLabel> {
        self.results.iter().map(|r| r.label).collect()
    }

    /// `dataset_id,label,cmi_score` with label 1 for dependent.
    pub fn write_results_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["dataset_id", "label", "cmi_score"])
            .map_err(csv_err)?;
        for r in &self.results {
            w.write_record([
                r.dataset_id.to_string(),
                r.label.as_int().to_string(),
                r.cmi_score.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Csv {
        line: e.position().map_or(0, |p| p.line()),
        message: e.to_string(),
    }
}

/// Balanced post non-linear benchmark: the first half of the specs are
/// conditionally independent, the rest dependent; every spec has its own seed.
pub fn post_nonlinear_specs(count: usize, d_z: usize, n: usize, seed: u64) -> Vec<ModelSpec> {
    (0..count)
        .map(|i| {
            ModelSpec::new(
                ModelKind::PostNonlinear {
                    d_z,
                    dependent: i >= count / 2,
                },
                n,
                seed::derive(seed, i as u64),
            )
        })
        .collect()
}

/// Generate and score every spec, then compute AuROC and precision/recall at
/// `threshold = 0`. Dataset `i` is scored with estimator seed
/// `derive(master_seed, i)`; the datasets themselves depend only on their specs.
pub fn run_cit_benchmark(specs: &[ModelSpec], cfg: &EstimatorConfig, master_seed: u64) -> Result<CitBenchmark> {
    if specs.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: specs.len(),
        });
    }
    let labels = specs
        .iter()
        .map(|s| match s.kind {
            ModelKind::PostNonlinear { dependent, .. } => Ok(if dependent {
                CiLabel::Dependent
            } else {
                CiLabel::Independent
            }),
            _ => Err(Error::InvalidConfig("CIT benchmark needs labelled (post-nonlinear) specs".into())),
        })
        .collect::<Result<Vec<_>>>()?;
    if !labels.contains(&CiLabel::Dependent) || !labels.contains(&CiLabel::Independent) {
        return Err(Error::SingleClass("CIT benchmark needs both labels"));
    }
    let scores = specs
        .par_iter()
        .enumerate()
        .map(|(i, spec)| {
            let data = spec.generate()?.data;
            let est = mi_diff_cmi(&data, &cfg.clone().with_seed(seed::derive(master_seed, i as u64)))?;
            Ok(est.value)
        })
        .collect::<Result<Vec<f64>>>()?;
    let metrics = metrics_for(&scores, &labels, 0.0)?;
    let results = scores
        .iter()
        .zip(&labels)
        .enumerate()
        .map(|(dataset_id, (&cmi_score, &label))| CitResult {
            dataset_id,
            label,
            cmi_score,
        })
        .collect();
    Ok(CitBenchmark {
        specs: specs.to_vec(),
        estimator: cfg.clone(),
        master_seed,
        results,
        metrics,
    })
}

pub fn metrics_for(scores: &[f64], labels: &[CiLabel], threshold: f64) -> Result<CitMetrics> {
    let (precision, recall) = precision_recall_at(scores, labels, threshold)?;
    Ok(CitMetrics {
        auroc: auroc(scores, labels)?,
        threshold,
        precision,
        recall,
        datasets: scores.len(),
        dependent: labels.iter().filter(|l| l.is_dependent()).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng as _;
    use CiLabel::{Dependent as D, Independent as I};

    #[test]
    fn auroc_examples() {
        assert_eq!(auroc(&[0.1, 0.4, 0.35, 0.8], &[I, I, D, D]).unwrap(), 0.75);
        assert_eq!(auroc(&[0.0, 1.0], &[I, D]).unwrap(), 1.0);
        assert_eq!(auroc(&[1.0, 0.0], &[I, D]).unwrap(), 0.0);
        assert_eq!(auroc(&[0.5, 0.5], &[I, D]).unwrap(), 0.5);
        assert!(matches!(auroc(&[0.5, 0.1], &[D, D]), Err(Error::SingleClass(_))));
        assert!(auroc(&[0.5], &[D, I]).is_err());
    }

    #[test]
    fn auroc_chance_level() {
        let mut rng = seed::rng(4);
        let n = 20_000;
        let scores: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let labels: Vec<CiLabel> = (0..n).map(|_| if rng.random_bool(0.5) { D } else { I }).collect();
        assert_abs_diff_eq!(auroc(&scores, &labels).unwrap(), 0.5, epsilon = 0.02);
    }

    #[test]
    fn precision_recall_examples() {
        assert_eq!(
            precision_recall_at(&[0.3, 0.2, -0.1, 0.0], &[D, D, I, I], 0.0).unwrap(),
            (Some(1.0), 1.0)
        );
        assert_eq!(precision_recall_at(&[1.0, -1.0], &[I, D], 0.0).unwrap(), (Some(0.0), 0.0));
        assert_eq!(precision_recall_at(&[-1.0, -1.0], &[I, D], 0.0).unwrap(), (None, 0.0));
        assert!(precision_recall_at(&[1.0, 1.0], &[I, I], 0.0).is_err());
    }

    #[test]
    fn reliability_constant_prediction() {
        let preds = vec![0.5; 100];
        let labels: Vec<bool> = (0..100).map(|i| i % 2 == 0).collect();
        let c = ReliabilityCurve::from_predictions(&preds, &labels, DEFAULT_BINS).unwrap();
        assert_eq!(c.counts.iter().filter(|&&n| n > 0).count(), 1);
        assert_eq!(c.total(), 100);
        assert_eq!(c.empirical_fraction[5], Some(0.5));
        assert_eq!(c.edges.len(), 11);
        assert_eq!(c.mean_predicted[0], None);
    }

    #[test]
    fn reliability_edges_and_errors() {
        let c = ReliabilityCurve::from_predictions(&[0.0, 1.0, 0.1, 0.0999], &[false, true, true, false], 10).unwrap();
        assert_eq!(c.counts[0], 2);
        assert_eq!(c.counts[1], 1);
        assert_eq!(c.counts[9], 1);
        assert!(ReliabilityCurve::from_predictions(&[1.2], &[true], 10).is_err());
        assert!(ReliabilityCurve::from_predictions(&[], &[], 10).is_err());
        assert!(ReliabilityCurve::from_predictions(&[0.5], &[true], 0).is_err());
    }

    #[test]
    fn benchmark_rejects_single_class() {
        let specs: Vec<ModelSpec> = post_nonlinear_specs(4, 2, 50, 1)
            .into_iter()
            .map(|mut s| {
                s.kind = ModelKind::PostNonlinear { d_z: 2, dependent: false };
                s
            })
            .collect();
        assert!(matches!(
            run_cit_benchmark(&specs, &EstimatorConfig::ccmi(), 0),
            Err(Error::SingleClass(_))
        ));
    }

    #[test]
    fn specs_are_balanced() {
        let specs = post_nonlinear_specs(20, 5, 100, 3);
        let dep = specs
            .iter()
            .filter(|s| matches!(s.kind, ModelKind::PostNonlinear { dependent: true, .. }))
            .count();
        assert_eq!(dep, 10);
    }

    #[test]
    fn results_csv() {
        let b = CitBenchmark {
            specs: vec![],
            estimator: EstimatorConfig::ccmi(),
            master_seed: 0,
            results: vec![
                CitResult { dataset_id: 0, label: I, cmi_score: -0.01 },
                CitResult { dataset_id: 1, label: D, cmi_score: 0.5 },
            ],
            metrics: metrics_for(&[-0.01, 0.5], &[I, D], 0.0).unwrap(),
        };
        let mut out = Vec::new();
        b.write_results_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "dataset_id,label,cmi_score\n0,0,-0.01\n1,1,0.5\n");
    }
}
