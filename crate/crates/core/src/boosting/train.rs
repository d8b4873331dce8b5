//! The boosting loop.

use std::time::Instant;

use super::combine::{combine_distributions, combine_scores};
use super::concat::{fit_shared_decoder, node_inputs, pair_inputs, DecoderTarget, SharedDecoder};
use super::data::{derive_seed, ExperimentData};
use super::stop::{should_stop, StopReason};
use super::update::{
    adaboost_r2_round, cap_weights, init_weights, r2_update_from_losses, renormalize,
    samme_r_node_update, samme_r_update, weighted_bootstrap, R2Status,
};
use super::{Algorithm, BoostConfig, BoostState, UpdateSource};
use crate::eval::{
    average_precision, margin_records, nonpositive_margin_fraction, recommendation_ap,
    threshold_error, MetricsReport, RoundMetrics,
};
use crate::gnn::{
    decode_pairwise, embed_nodes, embed_pairs, fit_weak_learner, predict_nodes, EncoderConfig,
    FitData, Task, TrainHyper, WeakLearnerParams,
};
use crate::graphdata::{Adjacency, EdgeExample, Graph, NodeExample};
use crate::numcore::Tensor;
use crate::{Error, Result};

type PairEmbeddings = (Tensor, Tensor);

/// Per-learner outputs on the fixed evaluation sets.
struct LearnerCache {
    train_eval: Option<PairEmbeddings>,
    val: Option<PairEmbeddings>,
    test: Option<PairEmbeddings>,
    node_pred: Option<[Vec<Vec<f64>>; 3]>,
    node_emb: Option<[Tensor; 3]>,
}

fn pair_scores(emb: &PairEmbeddings) -> Vec<f64> {
    (0..emb.0.rows())
        .map(|r| decode_pairwise(emb.0.row(r), emb.1.row(r)))
        .collect()
}

fn labels_of(edges: &[EdgeExample]) -> Vec<u8> {
    edges.iter().map(|e| e.label).collect()
}

fn node_ids(nodes: &[NodeExample]) -> Vec<usize> {
    nodes.iter().map(|n| n.node).collect()
}

fn node_labels(nodes: &[NodeExample]) -> Vec<Vec<f64>> {
    nodes.iter().map(|n| n.label_vector.clone()).collect()
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// A node prediction is wrong when its top class carries no label mass.
fn node_wrong(pred: &[f64], label: &[f64]) -> bool {
    label[argmax(pred)] <= 0.0
}

fn edge_wrong(score: f64, label: u8, tau: f64) -> bool {
    (score > tau) != (label == 1)
}

/// Half the L1 distance between label and prediction, in `[0, 1]`.
fn node_r2_loss(pred: &[f64], label: &[f64]) -> f64 {
    0.5 * pred
        .iter()
        .zip(label)
        .map(|(p, y)| (p - y).abs())
        .sum::<f64>()
}

fn cache_learner(
    learner: &WeakLearnerParams,
    data: &ExperimentData,
    concat: bool,
) -> Result<LearnerCache> {
    let (f, seed) = (&data.features, data.eval_seed);
    let (train_adj, test_adj) = (&data.train_adjacency, &data.test_adjacency);
    let mut cache = LearnerCache {
        train_eval: None,
        val: None,
        test: None,
        node_pred: None,
        node_emb: None,
    };
    if data.task.uses_edges() {
        cache.train_eval = Some(embed_pairs(learner, f, train_adj, &data.train_eval, seed)?);
        cache.val = Some(embed_pairs(learner, f, train_adj, &data.val, seed)?);
        cache.test = Some(embed_pairs(learner, f, test_adj, &data.test, seed)?);
    }
    if data.task.uses_nodes() {
        let sets = [&data.node_train, &data.node_val, &data.node_test];
        let adjs = [train_adj, train_adj, test_adj];
        let mut preds = Vec::with_capacity(3);
        let mut embs = Vec::with_capacity(3);
        for (nodes, adj) in sets.iter().zip(adjs) {
            let ids = node_ids(nodes);
            preds.push(predict_nodes(learner, f, adj, &ids, seed)?);
            if concat {
                embs.push(embed_nodes(
                    learner,
                    f,
                    adj,
                    &ids,
                    learner.config.include_self_in_node_task,
                    seed,
                )?);
            }
        }
        cache.node_pred = Some(preds.try_into().expect("three node sets"));
        if concat {
            cache.node_emb = Some(embs.try_into().expect("three node sets"));
        }
    }
    Ok(cache)
}

/// Ensemble outputs on the evaluation sets after some round.
struct EnsembleOutputs {
    edge: Option<[Vec<f64>; 3]>,
    node: Option<[Vec<Vec<f64>>; 3]>,
}

fn normalized_alphas(learners: &[WeakLearnerParams]) -> Vec<f64> {
    let total: f64 = learners.iter().map(|l| l.alpha).sum();
    learners.iter().map(|l| l.alpha / total).collect()
}

fn ensemble_outputs(
    state: &mut BoostState,
    caches: &[LearnerCache],
    data: &ExperimentData,
    hyper: &TrainHyper,
    seed: u64,
) -> Result<EnsembleOutputs> {
    let alphas: Vec<f64> = state.learners.iter().map(|l| l.alpha).collect();
    let concat = state.config.algorithm == Algorithm::ConcatNn;
    let mut out = EnsembleOutputs {
        edge: None,
        node: None,
    };
    if data.task.uses_edges() {
        let pick = |i: usize, c: &LearnerCache| -> PairEmbeddings {
            match i {
                0 => c.train_eval.clone(),
                1 => c.val.clone(),
                _ => c.test.clone(),
            }
            .expect("edge caches present")
        };
        if concat {
            let inputs = (0..3)
                .map(|i| {
                    let (src, dst): (Vec<Tensor>, Vec<Tensor>) =
                        caches.iter().map(|c| pick(i, c)).unzip();
                    pair_inputs(&src, &dst)
                })
                .collect::<Result<Vec<_>>>()?;
            let train_labels = labels_of(&data.train_eval);
            let val_labels = labels_of(&data.val);
            let dec = fit_shared_decoder(
                &inputs[0],
                DecoderTarget::Edges(&train_labels),
                Some((&inputs[1], DecoderTarget::Edges(&val_labels))),
                hyper,
                derive_seed(seed, 7000 + caches.len() as u64),
            )?;
            let scores = inputs
                .iter()
                .map(|x| Ok(dec.predict(x)?.into_iter().map(|r| r[0]).collect()))
                .collect::<Result<Vec<Vec<f64>>>>()?;
            state.edge_decoder = Some(dec);
            out.edge = Some(scores.try_into().expect("three sets"));
        } else {
            let sets = (0..3)
                .map(|i| {
                    let per: Vec<Vec<f64>> =
                        caches.iter().map(|c| pair_scores(&pick(i, c))).collect();
                    combine_scores(&per, &alphas)
                })
                .collect::<Result<Vec<_>>>()?;
            out.edge = Some(sets.try_into().expect("three sets"));
        }
    }
    if data.task.uses_nodes() {
        if concat {
            let inputs = (0..3)
                .map(|i| {
                    let embs: Vec<Tensor> = caches
                        .iter()
                        .map(|c| c.node_emb.as_ref().expect("node embeddings")[i].clone())
                        .collect();
                    node_inputs(&embs)
                })
                .collect::<Result<Vec<_>>>()?;
            let train_labels = node_labels(&data.node_train);
            let val_labels = node_labels(&data.node_val);
            let dec = fit_shared_decoder(
                &inputs[0],
                DecoderTarget::Nodes(&train_labels),
                Some((&inputs[1], DecoderTarget::Nodes(&val_labels))),
                hyper,
                derive_seed(seed, 8000 + caches.len() as u64),
            )?;
            let preds = inputs
                .iter()
                .map(|x| dec.predict(x))
                .collect::<Result<Vec<_>>>()?;
            state.node_decoder = Some(dec);
            out.node = Some(preds.try_into().expect("three sets"));
        } else {
            let sets = (0..3)
                .map(|i| {
                    let per: Vec<Vec<Vec<f64>>> = caches
                        .iter()
                        .map(|c| c.node_pred.as_ref().expect("node predictions")[i].clone())
                        .collect();
                    combine_distributions(&per, &alphas)
                })
                .collect::<Result<Vec<_>>>()?;
            out.node = Some(sets.try_into().expect("three sets"));
        }
    }
    Ok(out)
}

fn misclassified(out: &EnsembleOutputs, data: &ExperimentData, tau: f64) -> Vec<bool> {
    let mut flags = Vec::new();
    if let Some(edge) = &out.edge {
        flags.extend(
            data.train_eval
                .iter()
                .zip(&edge[0])
                .map(|(e, &s)| edge_wrong(s, e.label, tau)),
        );
    }
    if let Some(node) = &out.node {
        flags.extend(
            data.node_train
                .iter()
                .zip(&node[0])
                .map(|(n, r)| node_wrong(r, &n.label_vector)),
        );
    }
    flags
}

fn node_error(preds: &[Vec<f64>], nodes: &[NodeExample]) -> f64 {
    if nodes.is_empty() {
        return 0.0;
    }
    preds
        .iter()
        .zip(nodes)
        .filter(|(r, n)| node_wrong(r, &n.label_vector))
        .count() as f64
        / nodes.len() as f64
}

fn round_metrics(
    round: usize,
    out: &EnsembleOutputs,
    data: &ExperimentData,
    tau: f64,
    state: &BoostState,
) -> Result<RoundMetrics> {
    let mut m = RoundMetrics {
        round,
        alphas: normalized_alphas(&state.learners),
        ..RoundMetrics::default()
    };
    if let Some(edge) = &out.edge {
        let sets = [&data.train_eval, &data.val, &data.test];
        let aps = sets
            .iter()
            .zip(edge.iter())
            .map(|(s, scores)| average_precision(scores, &labels_of(s)))
            .collect::<Result<Vec<_>>>()?;
        m.train_ap = Some(aps[0]);
        m.val_ap = Some(aps[1]);
        m.test_ap = Some(aps[2]);
        let train_labels = labels_of(&data.train_eval);
        m.train_error = threshold_error(&train_labels, &edge[0], tau);
        m.test_error = threshold_error(&labels_of(&data.test), &edge[2], tau);
        m.train_nonpositive_margin = Some(nonpositive_margin_fraction(&margin_records(
            &train_labels,
            &edge[0],
            tau,
        )));
    }
    if let Some(node) = &out.node {
        let sets = [&data.node_train, &data.node_val, &data.node_test];
        let aps = sets
            .iter()
            .zip(node.iter())
            .map(|(s, preds)| recommendation_ap(preds, &node_labels(s)))
            .collect::<Result<Vec<_>>>()?;
        m.rec_train_ap = Some(aps[0]);
        m.rec_val_ap = Some(aps[1]);
        m.rec_test_ap = Some(aps[2]);
        if out.edge.is_none() {
            m.train_error = node_error(&node[0], &data.node_train);
            m.test_error = node_error(&node[2], &data.node_test);
        }
    }
    m.generalization_gap = (m.test_error - m.train_error).abs();
    Ok(m)
}

/// Runs boosting end to end. Round `k` fits a learner on the current
/// weighted pool (training positives plus fresh negatives), scores the
/// ensemble of the first `k` learners on the fixed evaluation sets,
/// applies the stopping rules and updates the weights.
pub fn train_adagnn(
    graph: &Graph,
    data: &ExperimentData,
    encoder: &EncoderConfig,
    config: &BoostConfig,
    hyper: &TrainHyper,
    seed: u64,
) -> Result<(BoostState, MetricsReport)> {
    let start = Instant::now();
    config.validate(data.task)?;
    encoder.validate()?;
    hyper.validate()?;
    let task = data.task;
    let source = config.update_source.unwrap_or(match task {
        Task::Multitask => UpdateSource::Combined,
        _ => UpdateSource::PerLearner,
    });
    let concat = config.algorithm == Algorithm::ConcatNn;
    let r2 = config.algorithm == Algorithm::AdaboostR2;
    let n_pos = data.train_positives.len();

    let mut state = BoostState {
        task,
        encoder: encoder.clone(),
        config: config.clone(),
        weights: Vec::new(),
        node_weights: Vec::new(),
        learners: Vec::new(),
        round_errors: Vec::new(),
        stopped: None,
        edge_decoder: None,
        node_decoder: None,
    };
    // Weights over the persistent positives and the mean weight a fresh
    // negative enters with.
    let (mut pos_weights, mut neg_weight) = if task.uses_edges() {
        let w = init_weights(2 * n_pos)?;
        (w[..n_pos].to_vec(), w[0])
    } else {
        (Vec::new(), 0.0)
    };
    let mut node_weights = if task.uses_nodes() {
        init_weights(data.node_train.len())?
    } else {
        Vec::new()
    };

    let mut caches: Vec<LearnerCache> = Vec::new();
    let mut report = MetricsReport {
        label: if config.max_learners == 1 {
            "baseline"
        } else {
            "adagnn"
        }
        .into(),
        task: serde_json::to_value(task)?
            .as_str()
            .unwrap_or_default()
            .into(),
        algorithm: serde_json::to_value(config.algorithm)?
            .as_str()
            .unwrap_or_default()
            .into(),
        eval_seed: data.eval_seed,
        unseen_test_fraction: data.unseen_test_fraction(),
        ..MetricsReport::default()
    };
    let mut previous_mis: Option<Vec<bool>> = None;
    let val = FitData {
        features: &data.features,
        adjacency: &data.train_adjacency,
        edges: &data.val,
        nodes: &data.node_val,
        eval_seed: data.eval_seed,
    };

    for round in 0..config.max_learners {
        // Weighted pool for this round.
        let mut pool = if task.uses_edges() {
            data.round_pool(graph, round)?
        } else {
            Vec::new()
        };
        for (i, e) in pool.iter_mut().enumerate() {
            e.weight = if i < n_pos {
                pos_weights[i]
            } else {
                neg_weight
            };
        }
        let mut pool_w: Vec<f64> = pool.iter().map(|e| e.weight).collect();
        if !pool_w.is_empty() {
            renormalize(&mut pool_w)?;
            for (e, &w) in pool.iter_mut().zip(&pool_w) {
                e.weight = w;
            }
        }
        let mut nodes: Vec<NodeExample> = data.node_train.clone();
        for (n, &w) in nodes.iter_mut().zip(&node_weights) {
            n.weight = w;
        }

        // R2 trains on a weighted bootstrap with uniform weights.
        let (fit_edges, fit_nodes) = if r2 && round > 0 {
            let bs_seed = derive_seed(seed, 3000 + round as u64);
            let edges = if task.uses_edges() {
                let idx = weighted_bootstrap(&pool_w, pool.len(), bs_seed)?;
                let u = 1.0 / idx.len() as f64;
                idx.iter()
                    .map(|&i| EdgeExample {
                        weight: u,
                        ..pool[i].clone()
                    })
                    .collect()
            } else {
                Vec::new()
            };
            let nodes_bs = if task.uses_nodes() {
                let idx = weighted_bootstrap(&node_weights, nodes.len(), bs_seed ^ 1)?;
                let u = 1.0 / idx.len() as f64;
                idx.iter()
                    .map(|&i| NodeExample {
                        weight: u,
                        ..nodes[i].clone()
                    })
                    .collect()
            } else {
                Vec::new()
            };
            (edges, nodes_bs)
        } else {
            (pool.clone(), nodes.clone())
        };

        let fit = FitData {
            features: &data.features,
            adjacency: &data.train_adjacency,
            edges: &fit_edges,
            nodes: &fit_nodes,
            eval_seed: data.eval_seed,
        };
        let (mut learner, diag) = fit_weak_learner(
            encoder,
            task,
            &fit,
            Some(&val),
            hyper,
            derive_seed(seed, 1000 + round as u64),
        )?;

        // The learner's own outputs on the pool and the node training set.
        let pool_scores = if task.uses_edges() {
            let (zs, zd) = embed_pairs(
                &learner,
                &data.features,
                &data.train_adjacency,
                &pool,
                data.eval_seed,
            )?;
            pair_scores(&(zs, zd))
        } else {
            Vec::new()
        };
        let cache = cache_learner(&learner, data, concat)?;
        let node_scores: Vec<Vec<f64>> = cache
            .node_pred
            .as_ref()
            .map(|p| p[0].clone())
            .unwrap_or_default();
        let pool_labels = labels_of(&pool);
        let weighted_error = if task.uses_edges() {
            pool.iter()
                .zip(&pool_scores)
                .filter(|(e, &s)| edge_wrong(s, e.label, config.tau))
                .map(|(e, _)| e.weight)
                .sum::<f64>()
        } else {
            nodes
                .iter()
                .zip(&node_scores)
                .filter(|(n, r)| node_wrong(r, &n.label_vector))
                .map(|(n, _)| n.weight)
                .sum::<f64>()
        };

        // Combination coefficient and, for R2, this round's weight update.
        let mut stop: Option<StopReason> = None;
        let mut r2_weights: Option<(Vec<f64>, Vec<f64>)> = None;
        if r2 {
            let (status, coefficient, new_edge, new_node) = if task.uses_edges() {
                let r = adaboost_r2_round(
                    &pool_w,
                    &pool_labels,
                    &pool_scores,
                    derive_seed(seed, 4000 + round as u64),
                )?;
                (r.status, r.coefficient, r.weights, Vec::new())
            } else {
                let losses: Vec<f64> = nodes
                    .iter()
                    .zip(&node_scores)
                    .map(|(n, r)| node_r2_loss(r, &n.label_vector))
                    .collect();
                let (w, _, beta, status) = r2_update_from_losses(&node_weights, &losses)?;
                (status, (1.0 / beta.max(1e-12)).ln(), Vec::new(), w)
            };
            match status {
                R2Status::Rejected if round > 0 => {
                    state.stopped = Some(StopReason::WeakLearnerViolation);
                    break;
                }
                R2Status::Rejected => {
                    learner.alpha = 1.0;
                    stop = Some(StopReason::WeakLearnerViolation);
                }
                R2Status::PerfectLearner => {
                    learner.alpha = coefficient;
                    stop = Some(StopReason::PerfectLearner);
                }
                R2Status::Accepted => learner.alpha = coefficient,
            }
            r2_weights = Some((new_edge, new_node));
        } else {
            learner.alpha = 1.0;
        }

        state.learners.push(learner);
        caches.push(cache);
        let out = ensemble_outputs(&mut state, &caches, data, hyper, seed)?;
        let current_mis = misclassified(&out, data, config.tau);
        let rule = should_stop(
            state.learners.len(),
            config.max_learners,
            previous_mis.as_deref(),
            &current_mis,
            config.stop_on_no_progress,
        );
        if let Some(reason) = rule {
            if reason.discards_round() {
                state.learners.pop();
                caches.pop();
                if !caches.is_empty() {
                    ensemble_outputs(&mut state, &caches, data, hyper, seed)?;
                }
                state.stopped = Some(reason);
                break;
            }
        }
        let stop = stop.or(rule);

        let mut metrics = round_metrics(round + 1, &out, data, config.tau, &state)?;
        metrics.weighted_train_error = weighted_error;
        metrics.learner_epochs = diag.epoch_loss.len();
        metrics.corrected = previous_mis.as_ref().map_or(0, |p| {
            p.iter()
                .zip(&current_mis)
                .filter(|(&a, &b)| a && !b)
                .count()
        });
        report.rounds.push(metrics);
        state.round_errors.push(weighted_error);

        if let Some(edge) = &out.edge {
            report.train_margins =
                margin_records(&labels_of(&data.train_eval), &edge[0], config.tau);
            report.test_margins = margin_records(&labels_of(&data.test), &edge[2], config.tau);
        }

        // Weight update for the next round.
        let (new_edge, new_node) = match r2_weights {
            Some(w) => w,
            None => {
                let edge_scores = match source {
                    UpdateSource::PerLearner => pool_scores.clone(),
                    UpdateSource::Combined if task.uses_edges() => {
                        ensemble_pool_scores(&state, data, &pool)?
                    }
                    UpdateSource::Combined => Vec::new(),
                };
                let node_preds = match source {
                    UpdateSource::PerLearner => node_scores.clone(),
                    UpdateSource::Combined => {
                        out.node.as_ref().map(|n| n[0].clone()).unwrap_or_default()
                    }
                };
                let e = if task.uses_edges() {
                    samme_r_update(
                        &pool_w,
                        &pool_labels,
                        &edge_scores,
                        config.boost_learning_rate,
                    )?
                } else {
                    Vec::new()
                };
                let n = if task.uses_nodes() {
                    let labels: Vec<&[f64]> =
                        nodes.iter().map(|n| n.label_vector.as_slice()).collect();
                    let preds: Vec<&[f64]> = node_preds.iter().map(Vec::as_slice).collect();
                    samme_r_node_update(&node_weights, &labels, &preds, config.boost_learning_rate)?
                } else {
                    Vec::new()
                };
                (e, n)
            }
        };
        if task.uses_edges() && !new_edge.is_empty() {
            let mut w = new_edge;
            cap_weights(&mut w, config.weight_cap);
            pos_weights = w[..n_pos].to_vec();
            neg_weight = w[n_pos..].iter().sum::<f64>() / (w.len() - n_pos) as f64;
            state.weights = w;
        }
        if task.uses_nodes() && !new_node.is_empty() {
            let mut w = new_node;
            cap_weights(&mut w, config.weight_cap);
            node_weights = w.clone();
            state.node_weights = w;
        }

        previous_mis = Some(current_mis);
        if let Some(reason) = stop {
            state.stopped = Some(reason);
            break;
        }
    }
    if state.learners.is_empty() {
        return Err(Error::invalid("boosting produced no learner"));
    }
    report.stop_reason = state.stopped.map(|r| r.label().to_string());
    report.runtime_seconds = start.elapsed().as_secs_f64();
    Ok((state, report))
}

fn ensemble_pool_scores(
    state: &BoostState,
    data: &ExperimentData,
    pool: &[EdgeExample],
) -> Result<Vec<f64>> {
    state.score_pairs(&data.features, &data.train_adjacency, pool, data.eval_seed)
}

/// Scores a trained ensemble on the evaluation sets of `data` without
/// retraining. The report holds one round: the full ensemble.
pub fn evaluate_state(state: &BoostState, data: &ExperimentData) -> Result<MetricsReport> {
    if state.learners.is_empty() {
        return Err(Error::invalid("cannot evaluate an untrained ensemble"));
    }
    if state.task != data.task {
        return Err(Error::invalid(format!(
            "checkpoint was trained for task {:?}, dataset prepared for {:?}",
            state.task, data.task
        )));
    }
    if state.encoder.input_dim != data.features.cols() {
        return Err(Error::invalid(format!(
            "feature dimension mismatch: checkpoint expects {}, dataset has {}",
            state.encoder.input_dim,
            data.features.cols()
        )));
    }
    let (f, seed) = (&data.features, data.eval_seed);
    let (train_adj, test_adj) = (&data.train_adjacency, &data.test_adjacency);
    let mut out = EnsembleOutputs {
        edge: None,
        node: None,
    };
    if data.task.uses_edges() {
        out.edge = Some([
            state.score_pairs(f, train_adj, &data.train_eval, seed)?,
            state.score_pairs(f, train_adj, &data.val, seed)?,
            state.score_pairs(f, test_adj, &data.test, seed)?,
        ]);
    }
    if data.task.uses_nodes() {
        let sets = [&data.node_train, &data.node_val, &data.node_test];
        let adjs = [train_adj, train_adj, test_adj];
        let preds = sets
            .iter()
            .zip(adjs)
            .map(|(nodes, adj)| state.predict_nodes(f, adj, &node_ids(nodes), seed))
            .collect::<Result<Vec<_>>>()?;
        out.node = Some(preds.try_into().expect("three node sets"));
    }
    let tau = state.config.tau;
    let mut metrics = round_metrics(state.learners.len(), &out, data, tau, state)?;
    metrics.weighted_train_error = state.round_errors.last().copied().unwrap_or_default();
    let mut report = MetricsReport {
        label: "eval".into(),
        task: serde_json::to_value(state.task)?
            .as_str()
            .unwrap_or_default()
            .into(),
        algorithm: serde_json::to_value(state.config.algorithm)?
            .as_str()
            .unwrap_or_default()
            .into(),
        eval_seed: data.eval_seed,
        unseen_test_fraction: data.unseen_test_fraction(),
        stop_reason: state.stopped.map(|r| r.label().to_string()),
        rounds: vec![metrics],
        ..MetricsReport::default()
    };
    if let Some(edge) = &out.edge {
        report.train_margins = margin_records(&labels_of(&data.train_eval), &edge[0], tau);
        report.test_margins = margin_records(&labels_of(&data.test), &edge[2], tau);
    }
    Ok(report)
}

impl BoostState {
    /// Normalized combination coefficients.
    pub fn alphas(&self) -> Vec<f64> {
        normalized_alphas(&self.learners)
    }

    /// Ensemble link scores of `pairs`.
    pub fn score_pairs(
        &self,
        features: &Tensor,
        adj: &Adjacency,
        pairs: &[EdgeExample],
        eval_seed: u64,
    ) -> Result<Vec<f64>> {
        if self.learners.is_empty() {
            return Err(Error::invalid("untrained ensemble"));
        }
        match (&self.edge_decoder, self.config.algorithm) {
            (Some(dec), Algorithm::ConcatNn) => super::concat::concat_nn_predict(
                &self.learners,
                dec,
                features,
                adj,
                pairs,
                eval_seed,
            ),
            _ => {
                let per = self
                    .learners
                    .iter()
                    .map(|l| crate::gnn::score_edges(l, features, adj, pairs, eval_seed))
                    .collect::<Result<Vec<_>>>()?;
                combine_scores(
                    &per,
                    &self.learners.iter().map(|l| l.alpha).collect::<Vec<_>>(),
                )
            }
        }
    }

    /// Ensemble recommendation distributions of `nodes`.
    pub fn predict_nodes(
        &self,
        features: &Tensor,
        adj: &Adjacency,
        nodes: &[usize],
        eval_seed: u64,
    ) -> Result<Vec<Vec<f64>>> {
        if self.learners.is_empty() {
            return Err(Error::invalid("untrained ensemble"));
        }
        match (&self.node_decoder, self.config.algorithm) {
            (Some(dec), Algorithm::ConcatNn) => super::concat::concat_nn_predict_nodes(
                &self.learners,
                dec,
                features,
                adj,
                nodes,
                eval_seed,
            ),
            _ => {
                let per = self
                    .learners
                    .iter()
                    .map(|l| predict_nodes(l, features, adj, nodes, eval_seed))
                    .collect::<Result<Vec<_>>>()?;
                combine_distributions(
                    &per,
                    &self.learners.iter().map(|l| l.alpha).collect::<Vec<_>>(),
                )
            }
        }
    }

    pub fn shared_decoder(&self) -> Option<&SharedDecoder> {
        self.edge_decoder.as_ref().or(self.node_decoder.as_ref())
    }
}
