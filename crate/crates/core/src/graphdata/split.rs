use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{edge_key, Edge, EdgeExample, Graph, GraphError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    RandomTransductive,
    Inductive,
    Chronological,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub mode: SplitMode,
    pub train_fraction: f64,
    pub seed: u64,
    /// Drop validation/test positives whose node pair already occurred in
    /// an earlier split (repeated interactions).
    #[serde(default)]
    pub dedup_pairs: bool,
}

impl SplitSpec {
    pub fn new(mode: SplitMode, train_fraction: f64, seed: u64) -> Self {
        Self {
            mode,
            train_fraction,
            seed,
            dedup_pairs: false,
        }
    }
}

/// Positive examples partitioned three ways.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeSplit {
    pub train: Vec<EdgeExample>,
    pub val: Vec<EdgeExample>,
    pub test: Vec<EdgeExample>,
    /// Nodes withheld from training (inductive mode only).
    pub held_out: Vec<usize>,
}

impl EdgeSplit {
    /// Nodes that appear in no training example.
    pub fn unseen_nodes(&self, num_nodes: usize) -> Vec<bool> {
        let mut seen = vec![false; num_nodes];
        for e in &self.train {
            seen[e.src] = true;
            seen[e.dst] = true;
        }
        seen.iter().map(|s| !s).collect()
    }
}

fn to_examples(edges: impl Iterator<Item = Edge>) -> Vec<EdgeExample> {
    edges
        .map(|e| EdgeExample::observed(e.src, e.dst, e.timestamp))
        .collect()
}

/// Cuts `len` items so that validation and test counts differ by at most one.
fn cut_points(len: usize, train_fraction: f64) -> (usize, usize) {
    let n_train = ((len as f64) * train_fraction).round() as usize;
    let n_train = n_train.min(len);
    let rest = len - n_train;
    (n_train, n_train + rest / 2)
}

pub fn make_split(graph: &Graph, spec: &SplitSpec) -> Result<EdgeSplit, GraphError> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(GraphError::BadFraction(spec.train_fraction));
    }
    if graph.num_edges() == 0 {
        return Err(GraphError::EmptyGraph);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut split = match spec.mode {
        SplitMode::RandomTransductive => {
            let mut edges = graph.edges().to_vec();
            edges.shuffle(&mut rng);
            let (a, b) = cut_points(edges.len(), spec.train_fraction);
            EdgeSplit {
                train: to_examples(edges[..a].iter().copied()),
                val: to_examples(edges[a..b].iter().copied()),
                test: to_examples(edges[b..].iter().copied()),
                held_out: Vec::new(),
            }
        }
        SplitMode::Chronological => chronological(graph, spec.train_fraction)?,
        SplitMode::Inductive => inductive(graph, spec.train_fraction, &mut rng),
    };
    if spec.dedup_pairs {
        let mut seen: HashSet<(usize, usize)> =
            split.train.iter().map(|e| edge_key(e.src, e.dst)).collect();
        split.val.retain(|e| seen.insert(edge_key(e.src, e.dst)));
        split.test.retain(|e| seen.insert(edge_key(e.src, e.dst)));
    }
    Ok(split)
}

fn chronological(graph: &Graph, train_fraction: f64) -> Result<EdgeSplit, GraphError> {
    if !graph.has_timestamps() {
        return Err(GraphError::MissingTimestamps);
    }
    let mut edges = graph.edges().to_vec();
    edges.sort_by(|a, b| {
        a.timestamp
            .partial_cmp(&b.timestamp)
            .expect("finite timestamps")
    });
    let (mut a, mut b) = cut_points(edges.len(), train_fraction);
    // Ties may not straddle a cut: move the cut past equal timestamps.
    let ts = |i: usize| edges[i].timestamp;
    while a > 0 && a < edges.len() && ts(a) == ts(a - 1) {
        a += 1;
    }
    b = b.max(a);
    while b > a && b < edges.len() && ts(b) == ts(b - 1) {
        b += 1;
    }
    Ok(EdgeSplit {
        train: to_examples(edges[..a].iter().copied()),
        val: to_examples(edges[a..b].iter().copied()),
        test: to_examples(edges[b..].iter().copied()),
        held_out: Vec::new(),
    })
}

/// Withholds a random node set until the edges touching it make up roughly
/// `1 - train_fraction` of all edges; those edges form validation and test.
fn inductive(graph: &Graph, train_fraction: f64, rng: &mut ChaCha8Rng) -> EdgeSplit {
    let adj = graph.adjacency();
    let mut order: Vec<usize> = (0..graph.num_nodes())
        .filter(|&v| adj.degree(v) > 0)
        .collect();
    order.shuffle(rng);
    let target = ((graph.num_edges() as f64) * (1.0 - train_fraction)).round() as usize;
    let mut held = vec![false; graph.num_nodes()];
    let mut touched = 0usize;
    let mut held_out = Vec::new();
    for v in order {
        if touched >= target {
            break;
        }
        held[v] = true;
        held_out.push(v);
        touched = graph
            .edges()
            .iter()
            .filter(|e| held[e.src] || held[e.dst])
            .count();
    }
    let (mut train, mut rest): (Vec<Edge>, Vec<Edge>) = graph
        .edges()
        .iter()
        .partition(|e| !(held[e.src] || held[e.dst]));
    rest.shuffle(rng);
    train.shuffle(rng);
    let half = rest.len() / 2;
    held_out.sort_unstable();
    EdgeSplit {
        train: to_examples(train.into_iter()),
        val: to_examples(rest[..half].iter().copied()),
        test: to_examples(rest[half..].iter().copied()),
        held_out,
    }
}

/// Node partition for node-level tasks; only labelled graphs qualify.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeSplit {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn make_node_split(graph: &Graph, spec: &SplitSpec) -> Result<NodeSplit, GraphError> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(GraphError::BadFraction(spec.train_fraction));
    }
    let labels = graph.node_labels().ok_or(GraphError::MissingLabels)?;
    let mut nodes: Vec<usize> = (0..graph.num_nodes())
        .filter(|&v| labels.row(v).iter().sum::<f64>() > 0.0)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x6e6f_6465);
    nodes.shuffle(&mut rng);
    let (a, b) = cut_points(nodes.len(), spec.train_fraction);
    Ok(NodeSplit {
        train: nodes[..a].to_vec(),
        val: nodes[a..b].to_vec(),
        test: nodes[b..].to_vec(),
    })
}
