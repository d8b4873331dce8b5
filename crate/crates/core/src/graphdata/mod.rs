//! Graph store, dataset ingestion, splitting, sampling and the synthetic
//! multi-modal generator.

mod graph;
mod io;
mod sampling;
mod split;
mod synth;

pub use graph::{edge_key, Adjacency, Edge, Graph};
pub use io::{
    load_edge_csv, load_edge_csv_str, load_node_features, load_node_features_str, FeatureFormat,
};
pub use sampling::{
    sample_negatives, sample_negatives_among, sample_neighbors, sample_neighbors_excluding,
    sample_neighbors_with, NeighborhoodSample,
};
pub use split::{make_node_split, make_split, EdgeSplit, NodeSplit, SplitMode, SplitSpec};
pub use synth::{gen_synthetic_multimodal, GroundTruth, SynthConfig, SyntheticGraph};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("edge {index}: endpoint {node} outside [0, {num_nodes})")]
    EndpointOutOfRange {
        index: usize,
        node: usize,
        num_nodes: usize,
    },
    #[error("timestamps must be present on all edges or none")]
    PartialTimestamps,
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: negative timestamp {value}")]
    NegativeTimestamp { line: usize, value: f64 },
    #[error("feature rows: expected {expected} (one per node), found {found}")]
    FeatureRowCount { expected: usize, found: usize },
    #[error("feature row for node {node:?} has {found} columns, expected {expected}")]
    FeatureDim {
        node: String,
        expected: usize,
        found: usize,
    },
    #[error("duplicate feature row for node {0:?}")]
    DuplicateNode(String),
    #[error("no feature row for node {0:?}")]
    MissingNode(String),
    #[error("feature row for unknown node {0:?}")]
    UnknownNode(String),
    #[error("all-zero feature row for node {0:?}")]
    ZeroFeatureRow(String),
    #[error("label row {0} has a negative entry")]
    NegativeLabel(usize),
    #[error("train_fraction {0} outside (0, 1)")]
    BadFraction(f64),
    #[error("graph has no edges to split")]
    EmptyGraph,
    #[error("chronological split needs edge timestamps")]
    MissingTimestamps,
    #[error("node split needs node labels")]
    MissingLabels,
    #[error("need at least 2 candidate nodes for negative sampling, have {0}")]
    TooFewNodes(usize),
    #[error("could not find {wanted} non-edges within {budget} attempts (found {found})")]
    NegativeBudget {
        wanted: usize,
        found: usize,
        budget: usize,
    },
    #[error("synthetic generator: {0}")]
    SynthParam(String),
    #[error(transparent)]
    Io(#[from] IoErrorString),
}

/// `std::io::Error` is neither `Clone` nor `PartialEq`; keep its message.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{0}")]
pub struct IoErrorString(pub String);

impl From<std::io::Error> for GraphError {
    fn from(e: std::io::Error) -> Self {
        GraphError::Io(IoErrorString(e.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Observed,
    NegativeSample,
}

/// One labelled node pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeExample {
    pub src: usize,
    pub dst: usize,
    pub label: u8,
    pub weight: f64,
    pub origin: Origin,
    /// Query time for chronological neighbourhoods.
    pub timestamp: Option<f64>,
}

impl EdgeExample {
    pub fn observed(src: usize, dst: usize, timestamp: Option<f64>) -> Self {
        Self {
            src,
            dst,
            label: 1,
            weight: 1.0,
            origin: Origin::Observed,
            timestamp,
        }
    }

    pub fn negative(src: usize, dst: usize, timestamp: Option<f64>) -> Self {
        Self {
            src,
            dst,
            label: 0,
            weight: 1.0,
            origin: Origin::NegativeSample,
            timestamp,
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.weight > 0.0
            && match self.origin {
                Origin::Observed => self.label == 1,
                Origin::NegativeSample => self.label == 0,
            }
    }
}

/// One node with a distribution-valued label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeExample {
    pub node: usize,
    pub label_vector: Vec<f64>,
    pub weight: f64,
}

impl NodeExample {
    /// Normalizes `raw` to sum 1; an all-zero or negative row is rejected.
    pub fn new(node: usize, raw: &[f64], weight: f64) -> Result<Self, GraphError> {
        if raw.iter().any(|&v| v < 0.0) {
            return Err(GraphError::NegativeLabel(node));
        }
        let total: f64 = raw.iter().sum();
        if total <= 0.0 {
            return Err(GraphError::NegativeLabel(node));
        }
        Ok(Self {
            node,
            label_vector: raw.iter().map(|v| v / total).collect(),
            weight,
        })
    }

    pub fn is_normalized(&self) -> bool {
        self.label_vector.iter().all(|&v| v >= 0.0)
            && (self.label_vector.iter().sum::<f64>() - 1.0).abs() <= 1e-9
    }
}
