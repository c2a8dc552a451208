//! Mutual information and conditional mutual information estimation from
//! samples.
//!
//! The central estimator trains a binary classifier to separate samples of a
//! joint distribution from samples of a reference (product or conditional
//! product) distribution, converts its predictions into point-wise likelihood
//! ratios, and plugs them into the Donsker–Varadhan representation of the KL
//! divergence. CMI is obtained either as the difference
//! `I(X; Y,Z) − I(X; Z)` ([`estimators::mi_diff_cmi`], "CCMI") or by pairing
//! the divergence estimator with a kNN-permutation conditional generator.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`nn`] | MLP, BCE, Adam, classifier and f-MINE critic training |
//! | [`dataset`] | `(X, Y, Z)` sample sets, splits, derangements, CSV |
//! | [`knn`] | ℓ∞ kd-tree, digamma, KSG, kNN-permutation generator |
//! | [`divergence`] | DV plug-in, classifier KL, f-MINE KL |
//! | [`estimators`] | Classifier-MI, CCMI, generator + classifier, bias correction |
//! | [`datagen`] | Synthetic models with ground truth |
//! | [`cit`] | AuROC, precision/recall, CI benchmark, reliability curves |
//!
//! All quantities are in nats.

pub mod cit;
pub mod datagen;
pub mod dataset;
pub mod divergence;
pub mod error;
pub mod estimators;
pub mod knn;
pub mod matrix;
pub mod nn;
pub mod seed;

pub use cit::{auroc, precision_recall_at, CitBenchmark, CiLabel, ReliabilityCurve};
pub use datagen::{GroundTruth, GroundTruthMethod, ModelSpec};
pub use dataset::{Block, SampleSet, SplitPair};
pub use divergence::{DivergenceConfig, DivergenceEstimate, FMineConfig};
pub use error::{Error, Result};
pub use estimators::{CmiEstimate, DivergenceBackend, EstimatorConfig, GeneratorKind};
pub use knn::{digamma, ksg_cmi, KdTree};
pub use matrix::RowMatrix;
pub use nn::{MlpArchitecture, MlpClassifier, TrainConfig};
