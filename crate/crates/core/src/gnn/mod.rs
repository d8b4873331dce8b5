//! One weak learner: a one-layer GNN encoder onto its own embedding space,
//! the pairwise and node decoders, weighted losses, and the fit loop.

mod encoder;
mod loss;
mod params;
mod train;

pub use encoder::{
    decode_node_batch, decode_pairwise, decode_pairwise_batch, encode, encode_batch, Encoded,
};
pub use loss::{link_loss, multitask_loss, node_loss};
pub use params::{EncoderConfig, EncoderKind, ParamLayout, WeakLearnerParams};
pub use train::{
    embed_nodes, embed_pairs, fit_weak_learner, node_neighborhoods, predict_nodes, score_edges,
    Diagnostics, FitData, Task, TrainHyper, ValidationData,
};

/// Mini-batch size used for every gradient step.
pub const BATCH_SIZE: usize = 200;
