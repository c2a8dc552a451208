//! Nearest-neighbour machinery: ℓ∞ kd-tree, digamma, KSG estimators and the
//! kNN-permutation conditional generator.

mod digamma;
mod generator;
mod kdtree;
mod ksg;

pub use digamma::digamma;
pub use generator::{knn_conditional_sample, knn_permute_generator, DEFAULT_GENERATOR_K};
pub use kdtree::{max_norm_distance, KdTree};
pub use ksg::{ksg_cmi, ksg_cmi_multi, DEFAULT_K, JITTER, TREE_MAX_DIM};
