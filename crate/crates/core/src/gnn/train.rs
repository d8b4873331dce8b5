//! Mini-batch Adam training of one weak learner and deterministic scoring.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::encoder::{decode_node_batch, decode_pairwise_batch, encode_batch};
use super::loss::{link_loss, multitask_loss, node_loss};
use super::params::{EncoderConfig, WeakLearnerParams};
use super::BATCH_SIZE;
use crate::eval::{average_precision, recommendation_ap};
use crate::graphdata::{
    sample_neighbors_excluding, Adjacency, EdgeExample, NeighborhoodSample, NodeExample,
};
use crate::numcore::{adam_step, AdamConfig, AdamState, Tape, Tensor, Var};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Link,
    Recommend,
    Multitask,
}

impl Task {
    pub fn uses_edges(self) -> bool {
        matches!(self, Task::Link | Task::Multitask)
    }

    pub fn uses_nodes(self) -> bool {
        matches!(self, Task::Recommend | Task::Multitask)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainHyper {
    pub learning_rate: f64,
    pub epochs: usize,
    pub patience: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    /// Weight of the link loss in multi-task training.
    #[serde(default = "default_mix")]
    pub mix: f64,
}

fn default_batch() -> usize {
    BATCH_SIZE
}

fn default_mix() -> f64 {
    0.5
}

impl Default for TrainHyper {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            epochs: 15,
            patience: 5,
            batch_size: BATCH_SIZE,
            mix: 0.5,
        }
    }
}

impl TrainHyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.mix) {
            return Err(Error::Config(format!(
                "mix must lie in [0, 1], got {}",
                self.mix
            )));
        }
        Ok(())
    }
}

/// Examples plus the graph they are scored against. Neighbourhoods are
/// drawn from `adjacency`; evaluation neighbourhoods are seeded per query
/// from `eval_seed`.
#[derive(Clone, Copy, Debug)]
pub struct FitData<'a> {
    pub features: &'a Tensor,
    pub adjacency: &'a Adjacency,
    pub edges: &'a [EdgeExample],
    pub nodes: &'a [NodeExample],
    pub eval_seed: u64,
}

/// Held-out examples for early stopping; same layout as [`FitData`].
pub type ValidationData<'a> = FitData<'a>;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Weighted training loss per epoch (weights normalized to sum 1).
    pub epoch_loss: Vec<f64>,
    /// Validation AP per epoch, when validation data was supplied.
    pub val_ap: Vec<f64>,
    /// Epoch (0-based) whose parameters were kept.
    pub best_epoch: Option<usize>,
    pub stopped_early: bool,
}

/// One neighbourhood request: `exclude` is the other endpoint of the pair
/// being scored, `cutoff` the query time.
#[derive(Clone, Copy, Debug)]
struct Query {
    center: usize,
    exclude: Option<usize>,
    cutoff: Option<f64>,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn query_seed(seed: u64, q: &Query) -> u64 {
    let partner = q.exclude.map_or(u64::MAX, |p| p as u64);
    splitmix(seed ^ splitmix(q.center as u64) ^ splitmix(partner).rotate_left(17))
}

fn sample_with<R: Rng>(adj: &Adjacency, q: &Query, size: usize, rng: &mut R) -> NeighborhoodSample {
    sample_neighbors_excluding(adj, q.center, size, q.cutoff, q.exclude, false, rng)
}

fn eval_samples(
    adj: &Adjacency,
    queries: &[Query],
    size: usize,
    seed: u64,
) -> Vec<NeighborhoodSample> {
    queries
        .iter()
        .map(|q| {
            sample_with(
                adj,
                q,
                size,
                &mut ChaCha8Rng::seed_from_u64(query_seed(seed, q)),
            )
        })
        .collect()
}

/// Neighbourhoods used when embedding whole nodes at evaluation time.
pub fn node_neighborhoods(
    adj: &Adjacency,
    nodes: &[usize],
    sample_size: usize,
    seed: u64,
) -> Vec<NeighborhoodSample> {
    let queries: Vec<Query> = nodes
        .iter()
        .map(|&center| Query {
            center,
            exclude: None,
            cutoff: None,
        })
        .collect();
    eval_samples(adj, &queries, sample_size, seed)
}

fn pair_queries(pairs: &[EdgeExample]) -> Vec<Query> {
    let src = pairs.iter().map(|e| Query {
        center: e.src,
        exclude: Some(e.dst),
        cutoff: e.timestamp,
    });
    let dst = pairs.iter().map(|e| Query {
        center: e.dst,
        exclude: Some(e.src),
        cutoff: e.timestamp,
    });
    src.chain(dst).collect()
}

fn bind_constants(tape: &mut Tape, params: &WeakLearnerParams) -> Vec<Var> {
    params.tensors.iter().map(|t| tape.constant(t)).collect()
}

fn check_nodes(
    params: &WeakLearnerParams,
    features: &Tensor,
    nodes: impl Iterator<Item = usize>,
) -> Result<()> {
    if features.cols() != params.config.input_dim {
        return Err(Error::invalid(format!(
            "feature dimension {} does not match encoder input_dim {}",
            features.cols(),
            params.config.input_dim
        )));
    }
    for v in nodes {
        if v >= features.rows() {
            return Err(Error::invalid(format!(
                "node {v} outside feature table of {} rows",
                features.rows()
            )));
        }
    }
    Ok(())
}

/// Per-pair embeddings `(z_src, z_dst)` with each side's neighbourhood
/// excluding the other endpoint.
pub fn embed_pairs(
    params: &WeakLearnerParams,
    features: &Tensor,
    adj: &Adjacency,
    pairs: &[EdgeExample],
    eval_seed: u64,
) -> Result<(Tensor, Tensor)> {
    check_nodes(params, features, pairs.iter().flat_map(|e| [e.src, e.dst]))?;
    let dz = params.config.embed_dim;
    let mut src = Vec::with_capacity(pairs.len() * dz);
    let mut dst = Vec::with_capacity(pairs.len() * dz);
    for chunk in pairs.chunks(BATCH_SIZE) {
        let samples = eval_samples(
            adj,
            &pair_queries(chunk),
            params.config.neighbor_sample_size,
            eval_seed,
        );
        let mut tape = Tape::new();
        let vars = bind_constants(&mut tape, params);
        let enc = encode_batch(&mut tape, params, &vars, features, &samples, true)?;
        let z = tape.value(enc.embeddings);
        src.extend_from_slice(&z[..chunk.len() * dz]);
        dst.extend_from_slice(&z[chunk.len() * dz..]);
    }
    Ok((
        Tensor::matrix(pairs.len(), dz, src)?,
        Tensor::matrix(pairs.len(), dz, dst)?,
    ))
}

/// Pairwise link probabilities for `pairs`.
pub fn score_edges(
    params: &WeakLearnerParams,
    features: &Tensor,
    adj: &Adjacency,
    pairs: &[EdgeExample],
    eval_seed: u64,
) -> Result<Vec<f64>> {
    let (zs, zd) = embed_pairs(params, features, adj, pairs, eval_seed)?;
    Ok((0..pairs.len())
        .map(|r| super::encoder::decode_pairwise(zs.row(r), zd.row(r)))
        .collect())
}

/// Whole-node embeddings, `nodes.len() x embed_dim`.
pub fn embed_nodes(
    params: &WeakLearnerParams,
    features: &Tensor,
    adj: &Adjacency,
    nodes: &[usize],
    include_self: bool,
    eval_seed: u64,
) -> Result<Tensor> {
    check_nodes(params, features, nodes.iter().copied())?;
    let dz = params.config.embed_dim;
    let mut out = Vec::with_capacity(nodes.len() * dz);
    for chunk in nodes.chunks(BATCH_SIZE) {
        let samples = node_neighborhoods(adj, chunk, params.config.neighbor_sample_size, eval_seed);
        let mut tape = Tape::new();
        let vars = bind_constants(&mut tape, params);
        let enc = encode_batch(&mut tape, params, &vars, features, &samples, include_self)?;
        out.extend_from_slice(tape.value(enc.embeddings));
    }
    Ok(Tensor::matrix(nodes.len(), dz, out)?)
}

/// Recommendation distributions, one row per node.
pub fn predict_nodes(
    params: &WeakLearnerParams,
    features: &Tensor,
    adj: &Adjacency,
    nodes: &[usize],
    eval_seed: u64,
) -> Result<Vec<Vec<f64>>> {
    check_nodes(params, features, nodes.iter().copied())?;
    let c = params
        .num_classes
        .ok_or_else(|| Error::invalid("learner has no node decoder"))?;
    let mut out = Vec::with_capacity(nodes.len());
    for chunk in nodes.chunks(BATCH_SIZE) {
        let samples = node_neighborhoods(adj, chunk, params.config.neighbor_sample_size, eval_seed);
        let mut tape = Tape::new();
        let vars = bind_constants(&mut tape, params);
        let enc = encode_batch(
            &mut tape,
            params,
            &vars,
            features,
            &samples,
            params.config.include_self_in_node_task,
        )?;
        let r = decode_node_batch(&mut tape, params, &vars, enc.embeddings)?;
        out.extend(tape.value(r).chunks(c).map(<[f64]>::to_vec));
    }
    Ok(out)
}

/// Validation score used for early stopping.
pub(crate) fn validation_ap(
    params: &WeakLearnerParams,
    task: Task,
    val: &ValidationData,
    mix: f64,
) -> Result<f64> {
    let link = if task.uses_edges() {
        let scores = score_edges(
            params,
            val.features,
            val.adjacency,
            val.edges,
            val.eval_seed,
        )?;
        let labels: Vec<u8> = val.edges.iter().map(|e| e.label).collect();
        Some(average_precision(&scores, &labels)?)
    } else {
        None
    };
    let node = if task.uses_nodes() {
        let nodes: Vec<usize> = val.nodes.iter().map(|n| n.node).collect();
        let pred = predict_nodes(params, val.features, val.adjacency, &nodes, val.eval_seed)?;
        let labels: Vec<Vec<f64>> = val.nodes.iter().map(|n| n.label_vector.clone()).collect();
        Some(recommendation_ap(&pred, &labels)?)
    } else {
        None
    };
    Ok(match (link, node) {
        (Some(l), Some(n)) => mix * l + (1.0 - mix) * n,
        (Some(l), None) => l,
        (None, Some(n)) => n,
        (None, None) => unreachable!("every task uses edges or nodes"),
    })
}

fn weight_scale(weights: impl Iterator<Item = f64>, n: usize) -> Result<f64> {
    let mut total = 0.0;
    for w in weights {
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::invalid(format!(
                "example weight must be positive, got {w}"
            )));
        }
        total += w;
    }
    Ok(n as f64 / total)
}

fn num_classes(task: Task, nodes: &[NodeExample]) -> Result<Option<usize>> {
    if !task.uses_nodes() {
        return Ok(None);
    }
    let c = nodes[0].label_vector.len();
    if nodes.iter().any(|n| n.label_vector.len() != c) {
        return Err(Error::invalid("node label vectors differ in length"));
    }
    Ok(Some(c))
}

/// Trains one learner on weighted examples with Adam over shuffled
/// mini-batches. Within a batch the loss uses weights rescaled so that the
/// mean weight over the whole training set is 1, divided by the batch
/// length. With validation data, training stops after `patience` epochs
/// without a validation AP improvement and the best parameters are kept.
pub fn fit_weak_learner(
    config: &EncoderConfig,
    task: Task,
    data: &FitData,
    val: Option<&ValidationData>,
    hyper: &TrainHyper,
    seed: u64,
) -> Result<(WeakLearnerParams, Diagnostics)> {
    hyper.validate()?;
    if (task.uses_edges() && data.edges.is_empty()) || (task.uses_nodes() && data.nodes.is_empty())
    {
        return Err(Error::invalid("training set is empty"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = WeakLearnerParams::init(config, num_classes(task, data.nodes)?, &mut rng)?;
    check_nodes(
        &params,
        data.features,
        data.edges
            .iter()
            .flat_map(|e| [e.src, e.dst])
            .chain(data.nodes.iter().map(|n| n.node)),
    )?;
    let edge_scale = if task.uses_edges() {
        weight_scale(data.edges.iter().map(|e| e.weight), data.edges.len())?
    } else {
        0.0
    };
    let node_scale = if task.uses_nodes() {
        weight_scale(data.nodes.iter().map(|n| n.weight), data.nodes.len())?
    } else {
        0.0
    };

    let mut adam = AdamState::new(
        &params.tensors,
        AdamConfig::with_learning_rate(hyper.learning_rate),
    );
    let mut diag = Diagnostics::default();
    let mut best: Option<(f64, Vec<Tensor>)> = None;
    let mut since_best = 0;
    let mut edge_order: Vec<usize> = (0..data.edges.len()).collect();
    let mut node_order: Vec<usize> = (0..data.nodes.len()).collect();
    let bs = hyper.batch_size;

    for epoch in 0..hyper.epochs {
        edge_order.shuffle(&mut rng);
        node_order.shuffle(&mut rng);
        let edge_batches: Vec<&[usize]> = if task.uses_edges() {
            edge_order.chunks(bs).collect()
        } else {
            vec![]
        };
        let node_batches: Vec<&[usize]> = if task.uses_nodes() {
            node_order.chunks(bs).collect()
        } else {
            vec![]
        };
        let steps = edge_batches.len().max(node_batches.len());
        let (mut edge_loss, mut node_loss_sum) = (0.0, 0.0);

        for step in 0..steps {
            let mut tape = Tape::new();
            let vars: Vec<Var> = params.tensors.iter().map(|t| tape.param(t)).collect();
            let link_part = match edge_batches.get(step % edge_batches.len().max(1)) {
                Some(batch) if task.uses_edges() => {
                    let examples: Vec<EdgeExample> =
                        batch.iter().map(|&i| data.edges[i].clone()).collect();
                    let queries = pair_queries(&examples);
                    let samples: Vec<NeighborhoodSample> = queries
                        .iter()
                        .map(|q| {
                            sample_with(data.adjacency, q, config.neighbor_sample_size, &mut rng)
                        })
                        .collect();
                    let enc =
                        encode_batch(&mut tape, &params, &vars, data.features, &samples, true)?;
                    let m = examples.len();
                    let src: Arc<[usize]> = (0..m).collect();
                    let dst: Arc<[usize]> = (m..2 * m).collect();
                    let s = decode_pairwise_batch(&mut tape, enc.embeddings, src, dst)?;
                    let labels: Vec<u8> = examples.iter().map(|e| e.label).collect();
                    let w: Vec<f64> = examples
                        .iter()
                        .map(|e| e.weight * edge_scale / m as f64)
                        .collect();
                    let l = link_loss(&mut tape, s, &labels, &w)?;
                    if step < edge_batches.len() {
                        edge_loss += tape.scalar(l).unwrap_or(0.0) * m as f64;
                    }
                    Some(l)
                }
                _ => None,
            };
            let node_part = match node_batches.get(step % node_batches.len().max(1)) {
                Some(batch) if task.uses_nodes() => {
                    let examples: Vec<&NodeExample> =
                        batch.iter().map(|&i| &data.nodes[i]).collect();
                    let samples: Vec<NeighborhoodSample> = examples
                        .iter()
                        .map(|n| {
                            let q = Query {
                                center: n.node,
                                exclude: None,
                                cutoff: None,
                            };
                            sample_with(data.adjacency, &q, config.neighbor_sample_size, &mut rng)
                        })
                        .collect();
                    let enc = encode_batch(
                        &mut tape,
                        &params,
                        &vars,
                        data.features,
                        &samples,
                        config.include_self_in_node_task,
                    )?;
                    let r = decode_node_batch(&mut tape, &params, &vars, enc.embeddings)?;
                    let m = examples.len();
                    let labels: Vec<&[f64]> =
                        examples.iter().map(|n| n.label_vector.as_slice()).collect();
                    let w: Vec<f64> = examples
                        .iter()
                        .map(|n| n.weight * node_scale / m as f64)
                        .collect();
                    let l = node_loss(&mut tape, r, &labels, &w)?;
                    if step < node_batches.len() {
                        node_loss_sum += tape.scalar(l).unwrap_or(0.0) * m as f64;
                    }
                    Some(l)
                }
                _ => None,
            };
            let total = match (link_part, node_part) {
                (Some(a), Some(b)) => multitask_loss(&mut tape, a, b, hyper.mix)?,
                (Some(a), None) => a,
                (None, Some(b)) => b,
                (None, None) => break,
            };
            let grads = tape.backward(total)?;
            grads.write_into(&mut params.tensors, &vars)?;
            adam_step(&mut params.tensors, &mut adam)?;
        }
        for t in &mut params.tensors {
            t.clear_grad();
        }
        if !params.tensors.iter().all(Tensor::is_finite) {
            return Err(Error::invalid(format!(
                "training diverged at epoch {epoch}"
            )));
        }

        let epoch_loss = match task {
            Task::Link => edge_loss / data.edges.len() as f64,
            Task::Recommend => node_loss_sum / data.nodes.len() as f64,
            Task::Multitask => {
                hyper.mix * edge_loss / data.edges.len() as f64
                    + (1.0 - hyper.mix) * node_loss_sum / data.nodes.len() as f64
            }
        };
        diag.epoch_loss.push(epoch_loss);

        if let Some(v) = val {
            let ap = validation_ap(&params, task, v, hyper.mix)?;
            diag.val_ap.push(ap);
            if best.as_ref().map_or(true, |(b, _)| ap > *b) {
                best = Some((ap, params.tensors.clone()));
                diag.best_epoch = Some(epoch);
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= hyper.patience {
                    diag.stopped_early = true;
                    break;
                }
            }
        } else {
            diag.best_epoch = Some(epoch);
        }
    }
    if let Some((_, tensors)) = best {
        params.tensors = tensors;
    }
    Ok((params, diag))
}
