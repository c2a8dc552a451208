//! Minimal feed-forward network used as the two-sample classifier and as the
//! f-MINE critic.

pub mod adam;
pub mod loss;
pub mod mlp;
pub mod train;

pub use adam::{AdamParams, AdamState, ADAM_EPSILON};
pub use loss::{bce_loss, bce_with_logits, log_sigmoid, sigmoid, softplus};
pub use mlp::{MlpArchitecture, MlpClassifier};
pub use train::{
    f_bound, fit_classifier, fit_f_mine_critic, train_binary_classifier, train_f_mine_critic,
    TrainConfig,
};
