//! Hierarchical group-lasso proximal operator and the dense-to-sparse
//! regularization path trainer.

mod path;
mod prox;

pub use path::{train_path, BatchLogBase, PathCheckpoint, PathConfig, PathOutcome};
pub use prox::{hier_prox, soft_threshold, HierProxOutcome, ProxConfig, ProxRule};
