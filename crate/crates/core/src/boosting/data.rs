use std::collections::HashSet;

use crate::gnn::Task;
use crate::graphdata::{
    make_node_split, make_split, sample_negatives_among, Adjacency, EdgeExample, Graph,
    NodeExample, SplitSpec,
};
use crate::numcore::Tensor;
use crate::{Error, Result};

/// Everything a boosting run reads: features, the message-passing graphs,
/// and the fixed evaluation sets.
#[derive(Clone, Debug)]
pub struct ExperimentData {
    pub task: Task,
    pub split: SplitSpec,
    pub features: Tensor,
    /// Training positives only; used for training and validation scoring.
    pub train_adjacency: Adjacency,
    /// Training and validation positives; used for test scoring.
    pub test_adjacency: Adjacency,
    pub train_positives: Vec<EdgeExample>,
    /// Training positives plus an equal number of fixed negatives; margins,
    /// training error and the stopping rule are measured here.
    pub train_eval: Vec<EdgeExample>,
    pub val: Vec<EdgeExample>,
    pub test: Vec<EdgeExample>,
    pub node_train: Vec<NodeExample>,
    pub node_val: Vec<NodeExample>,
    pub node_test: Vec<NodeExample>,
    /// Endpoints allowed in per-round training negatives.
    pub negative_pool: Vec<usize>,
    pub held_out: Vec<usize>,
    pub eval_seed: u64,
    /// Base seed of the per-round training negatives.
    pub negative_seed: u64,
}

/// Seed of an independent random stream derived from `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn with_negatives(
    graph: &Graph,
    nodes: &[usize],
    positives: &[EdgeExample],
    seed: u64,
) -> Result<Vec<EdgeExample>> {
    let mut out = positives.to_vec();
    out.extend(sample_negatives_among(
        graph,
        nodes,
        positives.len(),
        positives,
        seed,
    )?);
    Ok(out)
}

fn node_examples(labels: &Tensor, nodes: &[usize]) -> Result<Vec<NodeExample>> {
    nodes
        .iter()
        .map(|&v| Ok(NodeExample::new(v, labels.row(v), 1.0)?))
        .collect()
}

impl ExperimentData {
    /// Splits `graph` per `split` and draws the fixed evaluation negatives
    /// from `seed`.
    pub fn prepare(graph: &Graph, split: &SplitSpec, task: Task, seed: u64) -> Result<Self> {
        let features = graph
            .node_features()
            .ok_or_else(|| Error::invalid("graph has no node features"))?
            .clone();
        let all_nodes: Vec<usize> = (0..graph.num_nodes()).collect();
        let eval_seed = derive_seed(seed, 1);
        let negative_seed = derive_seed(seed, 2);

        let (mut train_positives, mut train_eval, mut val, mut test) =
            (vec![], vec![], vec![], vec![]);
        let mut held_out = Vec::new();
        let (train_adjacency, test_adjacency, negative_pool) = if task.uses_edges() {
            let s = make_split(graph, split)?;
            if s.train.is_empty() || s.val.is_empty() || s.test.is_empty() {
                return Err(Error::invalid(
                    "split leaves an empty train, validation or test set",
                ));
            }
            let held: HashSet<usize> = s.held_out.iter().copied().collect();
            let pool: Vec<usize> = all_nodes
                .iter()
                .copied()
                .filter(|v| !held.contains(v))
                .collect();
            train_eval = with_negatives(graph, &pool, &s.train, derive_seed(seed, 3))?;
            val = with_negatives(graph, &all_nodes, &s.val, derive_seed(seed, 4))?;
            test = with_negatives(graph, &all_nodes, &s.test, derive_seed(seed, 5))?;
            let train_adj = Adjacency::from_examples(graph.num_nodes(), &s.train);
            let both: Vec<EdgeExample> = s.train.iter().chain(&s.val).cloned().collect();
            let test_adj = Adjacency::from_examples(graph.num_nodes(), &both);
            train_positives = s.train;
            held_out = s.held_out;
            (train_adj, test_adj, pool)
        } else {
            let adj = graph.adjacency();
            (adj.clone(), adj, all_nodes.clone())
        };

        let (mut node_train, mut node_val, mut node_test) = (vec![], vec![], vec![]);
        if task.uses_nodes() {
            let labels = graph
                .node_labels()
                .ok_or_else(|| Error::invalid("recommendation needs node labels"))?;
            let ns = make_node_split(graph, split)?;
            node_train = node_examples(labels, &ns.train)?;
            node_val = node_examples(labels, &ns.val)?;
            node_test = node_examples(labels, &ns.test)?;
            if node_train.is_empty() || node_val.is_empty() || node_test.is_empty() {
                return Err(Error::invalid("node split leaves an empty set"));
            }
        }

        Ok(Self {
            task,
            split: split.clone(),
            features,
            train_adjacency,
            test_adjacency,
            train_positives,
            train_eval,
            val,
            test,
            node_train,
            node_val,
            node_test,
            negative_pool,
            held_out,
            eval_seed,
            negative_seed,
        })
    }

    /// Training pool of round `round`: positives followed by freshly drawn
    /// negatives.
    pub fn round_pool(&self, graph: &Graph, round: usize) -> Result<Vec<EdgeExample>> {
        with_negatives(
            graph,
            &self.negative_pool,
            &self.train_positives,
            derive_seed(self.negative_seed, round as u64),
        )
    }

    /// Share of test examples with an endpoint that appears in no training
    /// positive.
    pub fn unseen_test_fraction(&self) -> Option<f64> {
        if self.test.is_empty() {
            return None;
        }
        let mut seen = vec![false; self.features.rows()];
        for e in &self.train_positives {
            seen[e.src] = true;
            seen[e.dst] = true;
        }
        let unseen = self
            .test
            .iter()
            .filter(|e| !seen[e.src] || !seen[e.dst])
            .count();
        Some(unseen as f64 / self.test.len() as f64)
    }
}
