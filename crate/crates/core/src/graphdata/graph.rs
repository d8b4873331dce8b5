use std::collections::HashSet;

use super::GraphError;
use crate::numcore::Tensor;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub timestamp: Option<f64>,
}

impl Edge {
    pub fn new(src: usize, dst: usize) -> Self {
        Self {
            src,
            dst,
            timestamp: None,
        }
    }

    pub fn timed(src: usize, dst: usize, t: f64) -> Self {
        Self {
            src,
            dst,
            timestamp: Some(t),
        }
    }
}

/// Unordered pair key; edges are undirected.
pub fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Immutable graph: nodes, edges, node/edge features, optional node labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    num_nodes: usize,
    edges: Vec<Edge>,
    node_ids: Vec<String>,
    node_features: Option<Tensor>,
    edge_features: Option<Tensor>,
    node_labels: Option<Tensor>,
}

impl Graph {
    pub fn new(num_nodes: usize, edges: Vec<Edge>) -> Result<Self, GraphError> {
        for (index, e) in edges.iter().enumerate() {
            for node in [e.src, e.dst] {
                if node >= num_nodes {
                    return Err(GraphError::EndpointOutOfRange {
                        index,
                        node,
                        num_nodes,
                    });
                }
            }
        }
        let timed = edges.iter().filter(|e| e.timestamp.is_some()).count();
        if timed != 0 && timed != edges.len() {
            return Err(GraphError::PartialTimestamps);
        }
        if let Some((line, e)) = edges
            .iter()
            .enumerate()
            .find(|(_, e)| e.timestamp.is_some_and(|t| t < 0.0 || t.is_nan()))
        {
            return Err(GraphError::NegativeTimestamp {
                line: line + 1,
                value: e.timestamp.unwrap_or_default(),
            });
        }
        Ok(Self {
            num_nodes,
            edges,
            node_ids: (0..num_nodes).map(|i| i.to_string()).collect(),
            node_features: None,
            edge_features: None,
            node_labels: None,
        })
    }

    /// Attaches external ids, one per compacted node.
    pub fn with_node_ids(mut self, ids: Vec<String>) -> Result<Self, GraphError> {
        if ids.len() != self.num_nodes {
            return Err(GraphError::FeatureRowCount {
                expected: self.num_nodes,
                found: ids.len(),
            });
        }
        self.node_ids = ids;
        Ok(self)
    }

    pub fn with_node_features(mut self, features: Tensor) -> Result<Self, GraphError> {
        if features.rows() != self.num_nodes {
            return Err(GraphError::FeatureRowCount {
                expected: self.num_nodes,
                found: features.rows(),
            });
        }
        self.node_features = Some(features);
        Ok(self)
    }

    pub fn with_edge_features(mut self, features: Tensor) -> Result<Self, GraphError> {
        if features.rows() != self.edges.len() {
            return Err(GraphError::FeatureRowCount {
                expected: self.edges.len(),
                found: features.rows(),
            });
        }
        self.edge_features = Some(features);
        Ok(self)
    }

    pub fn with_node_labels(mut self, labels: Tensor) -> Result<Self, GraphError> {
        if labels.rows() != self.num_nodes {
            return Err(GraphError::FeatureRowCount {
                expected: self.num_nodes,
                found: labels.rows(),
            });
        }
        if let Some(r) = (0..labels.rows()).find(|&r| labels.row(r).iter().any(|&v| v < 0.0)) {
            return Err(GraphError::NegativeLabel(r));
        }
        self.node_labels = Some(labels);
        Ok(self)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn node_features(&self) -> Option<&Tensor> {
        self.node_features.as_ref()
    }

    pub fn edge_features(&self) -> Option<&Tensor> {
        self.edge_features.as_ref()
    }

    pub fn node_labels(&self) -> Option<&Tensor> {
        self.node_labels.as_ref()
    }

    pub fn feature_dim(&self) -> usize {
        self.node_features.as_ref().map_or(0, Tensor::cols)
    }

    pub fn has_timestamps(&self) -> bool {
        self.edges.first().is_some_and(|e| e.timestamp.is_some())
    }

    /// Distinct unordered node pairs present as edges.
    pub fn edge_set(&self) -> HashSet<(usize, usize)> {
        self.edges.iter().map(|e| edge_key(e.src, e.dst)).collect()
    }

    pub fn adjacency(&self) -> Adjacency {
        Adjacency::from_edges(self.num_nodes, self.edges.iter())
    }
}

/// Mirrored CSR adjacency over a subset of edges, carrying edge timestamps.
#[derive(Clone, Debug, PartialEq)]
pub struct Adjacency {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    times: Vec<Option<f64>>,
}

impl Adjacency {
    pub fn from_edges<'a>(num_nodes: usize, edges: impl Iterator<Item = &'a Edge> + Clone) -> Self {
        let mut degree = vec![0usize; num_nodes];
        for e in edges.clone() {
            degree[e.src] += 1;
            if e.src != e.dst {
                degree[e.dst] += 1;
            }
        }
        let mut offsets = Vec::with_capacity(num_nodes + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let total = *offsets.last().unwrap();
        let mut neighbors = vec![0; total];
        let mut times = vec![None; total];
        let mut fill = offsets[..num_nodes].to_vec();
        for e in edges {
            neighbors[fill[e.src]] = e.dst;
            times[fill[e.src]] = e.timestamp;
            fill[e.src] += 1;
            if e.src != e.dst {
                neighbors[fill[e.dst]] = e.src;
                times[fill[e.dst]] = e.timestamp;
                fill[e.dst] += 1;
            }
        }
        Self {
            offsets,
            neighbors,
            times,
        }
    }

    pub fn from_examples(num_nodes: usize, examples: &[super::EdgeExample]) -> Self {
        let edges: Vec<Edge> = examples
            .iter()
            .filter(|e| e.label == 1)
            .map(|e| Edge {
                src: e.src,
                dst: e.dst,
                timestamp: e.timestamp,
            })
            .collect();
        Self::from_edges(num_nodes, edges.iter())
    }

    pub fn num_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn neighbor_times(&self, v: usize) -> &[Option<f64>] {
        &self.times[self.offsets[v]..self.offsets[v + 1]]
    }
}
