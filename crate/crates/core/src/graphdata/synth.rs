//! Overlapping-community generator: nodes belong to latent interest modes,
//! edges form between nodes that share a mode, and each edge records the
//! mode that generated it.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{edge_key, Edge, Graph, GraphError};
use crate::numcore::Tensor;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub num_nodes: usize,
    pub num_modes: usize,
    pub feature_dim_per_mode: usize,
    pub modes_per_node: usize,
    pub intra_mode_edge_prob: f64,
    /// Per generated mode edge, chance of adding one uniformly random extra edge.
    pub noise_edge_prob: f64,
    pub seed: u64,
    #[serde(default = "default_feature_noise")]
    pub feature_noise: f64,
    #[serde(default = "default_inactive_noise")]
    pub inactive_noise: f64,
}

fn default_feature_noise() -> f64 {
    0.3
}

fn default_inactive_noise() -> f64 {
    0.01
}

impl SynthConfig {
    pub fn new(num_nodes: usize, num_modes: usize, modes_per_node: usize, seed: u64) -> Self {
        Self {
            num_nodes,
            num_modes,
            feature_dim_per_mode: 8,
            modes_per_node,
            intra_mode_edge_prob: 0.01,
            noise_edge_prob: 0.0,
            seed,
            feature_noise: default_feature_noise(),
            inactive_noise: default_inactive_noise(),
        }
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        let bad = |m: String| Err(GraphError::SynthParam(m));
        if self.num_modes < 2 {
            return bad(format!("num_modes must be >= 2, got {}", self.num_modes));
        }
        if self.modes_per_node == 0 || self.modes_per_node > self.num_modes {
            return bad(format!(
                "modes_per_node must be in [1, {}], got {}",
                self.num_modes, self.modes_per_node
            ));
        }
        if self.num_nodes < 2 {
            return bad(format!("num_nodes must be >= 2, got {}", self.num_nodes));
        }
        if self.feature_dim_per_mode == 0 {
            return bad("feature_dim_per_mode must be positive".into());
        }
        for (name, p) in [
            ("intra_mode_edge_prob", self.intra_mode_edge_prob),
            ("noise_edge_prob", self.noise_edge_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must be in [0, 1], got {p}"));
            }
        }
        if !(self.feature_noise >= 0.0 && self.inactive_noise >= 0.0) {
            return bad("noise scales must be non-negative".into());
        }
        Ok(())
    }
}

/// Latent structure behind a generated graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    /// Sorted mode list per node.
    pub node_modes: Vec<Vec<usize>>,
    /// Generating mode per edge; `None` for noise edges.
    pub edge_modes: Vec<Option<usize>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticGraph {
    pub graph: Graph,
    pub truth: GroundTruth,
}

impl SyntheticGraph {
    pub fn shares_mode(&self, a: usize, b: usize) -> bool {
        let (ma, mb) = (&self.truth.node_modes[a], &self.truth.node_modes[b]);
        ma.iter().any(|m| mb.contains(m))
    }
}

pub fn gen_synthetic_multimodal(cfg: &SynthConfig) -> Result<SyntheticGraph, GraphError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (n, k, d) = (cfg.num_nodes, cfg.num_modes, cfg.feature_dim_per_mode);

    let node_modes: Vec<Vec<usize>> = (0..n)
        .map(|_| {
            let mut m = index::sample(&mut rng, k, cfg.modes_per_node).into_vec();
            m.sort_unstable();
            m
        })
        .collect();

    let std_normal = Normal::new(0.0, 1.0).expect("valid normal");
    let centroids: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..d).map(|_| std_normal.sample(&mut rng)).collect())
        .collect();
    let mut features = Vec::with_capacity(n * k * d);
    for modes in &node_modes {
        for (m, centroid) in centroids.iter().enumerate() {
            let active = modes.contains(&m);
            for &c in centroid {
                let noise = std_normal.sample(&mut rng);
                features.push(if active {
                    c + cfg.feature_noise * noise
                } else {
                    cfg.inactive_noise * noise
                });
            }
        }
    }

    let mut edges = Vec::new();
    let mut edge_modes = Vec::new();
    let mut present = std::collections::HashSet::new();
    for i in 0..n {
        for j in (i + 1)..n {
            for &m in &node_modes[i] {
                if !node_modes[j].contains(&m) {
                    continue;
                }
                if rng.gen::<f64>() < cfg.intra_mode_edge_prob {
                    edges.push(Edge::new(i, j));
                    edge_modes.push(Some(m));
                    present.insert((i, j));
                    break;
                }
            }
        }
    }
    let mode_edges = edges.len();
    let max_pairs = n * (n - 1) / 2;
    for _ in 0..mode_edges {
        if rng.gen::<f64>() >= cfg.noise_edge_prob || present.len() >= max_pairs {
            continue;
        }
        loop {
            let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
            if a != b && present.insert(edge_key(a, b)) {
                let (a, b) = edge_key(a, b);
                edges.push(Edge::new(a, b));
                edge_modes.push(None);
                break;
            }
        }
    }

    let mut labels = vec![0.0; n * k];
    for (i, modes) in node_modes.iter().enumerate() {
        let share = 1.0 / modes.len() as f64;
        for &m in modes {
            labels[i * k + m] = share;
        }
    }

    let graph = Graph::new(n, edges)?
        .with_node_features(Tensor::matrix(n, k * d, features).expect("sized"))?
        .with_node_labels(Tensor::matrix(n, k, labels).expect("sized"))?;
    Ok(SyntheticGraph {
        graph,
        truth: GroundTruth {
            seed: cfg.seed,
            node_modes,
            edge_modes,
        },
    })
}
