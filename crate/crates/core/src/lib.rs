//! Boosted ensembles of one-layer GNN encoders, each trained onto its own
//! embedding space, for link prediction, node recommendation and multi-task
//! learning.
//!
//! Modules, bottom-up:
//! - [`numcore`]: dense tensors with a reverse-mode tape and Adam.
//! - [`graphdata`]: graph store, loaders, splits, samplers, synthetic generator.
//! - [`gnn`]: one weak learner (encoder, decoders, weighted losses, fit loop).
//! - [`boosting`]: SAMME.R / AdaBoost.R2 / concatenated-decoder meta-learner.
//! - [`eval`]: average precision, margins, error curves, embedding export.

pub mod boosting;
pub mod eval;
pub mod gnn;
pub mod graphdata;
pub mod numcore;

mod error;

pub use error::{Error, Result};
