//! Discrepancy-aware graph masked auto-encoder.
//!
//! A masked graph auto-encoder that, next to reconstructing hidden node
//! features, reconstructs Laplacian-sharpened feature differences between
//! neighbours selected by the encoder's own attention. The crate contains the
//! whole pipeline: sparse graphs and synthetic generators, a small
//! reverse-mode autodiff engine, the model and its losses, training with
//! checkpoints, and downstream evaluation.

pub mod autodiff;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod graph;
pub mod loss;
pub mod matrix;
pub mod model;
pub mod train;

pub use error::{Error, Result};
pub use graph::{Dataset, Graph, LabelVector};
pub use matrix::{FeatureMatrix, Matrix};
