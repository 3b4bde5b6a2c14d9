//! Simultaneous multi-class classification and feature selection for
//! multivariate functional data (curves and images).
//!
//! The pipeline: grid-sampled functional observations are projected onto an
//! orthonormal basis by quadrature ([`funcdata`]), fed through a residual
//! sparse network ([`network`]) trained along a hierarchical group-lasso
//! regularization path ([`lassonet`]), and the final model is picked by an
//! information criterion or validation misclassification risk
//! ([`selection`]). [`simgen`] contains deterministic generators for the six
//! benchmark simulation designs and [`evaluation`] the replicate harness.

pub mod config;
pub mod error;
pub mod evaluation;
pub mod funcdata;
pub mod lassonet;
pub mod network;
pub mod selection;
pub mod simgen;

pub use error::{Error, Result};
