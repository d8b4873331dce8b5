//! Encoder forward pass and the two decoders, expressed on the tape.
//!
//! A batch of centers is encoded at once: neighbour feature rows are
//! stacked and grouped into one segment per center.

use std::sync::Arc;

use super::params::{EncoderKind, WeakLearnerParams};
use crate::graphdata::NeighborhoodSample;
use crate::numcore::{Segments, Tape, Tensor, Var};
use crate::{Error, Result};

/// Tape handles produced by [`encode_batch`].
#[derive(Clone, Debug)]
pub struct Encoded {
    /// `(centers, embed_dim)` embeddings.
    pub embeddings: Var,
    /// `(centers, embed_dim)` neighbour aggregates before COMBINE.
    pub aggregate: Var,
    /// Per head, `(neighbour rows, 1)` attention weights (attention kind only).
    pub attention: Vec<Var>,
    pub segments: Arc<Segments>,
}

fn gather_feature_rows(features: &Tensor, rows: impl Iterator<Item = usize>) -> (Vec<f64>, usize) {
    let d = features.cols();
    let mut out = Vec::new();
    let mut n = 0;
    for r in rows {
        out.extend_from_slice(features.row(r));
        n += 1;
    }
    debug_assert_eq!(out.len(), n * d);
    (out, n)
}

/// Encodes each sampled neighbourhood. `param_vars` are the learner's
/// tensors already bound to `tape` (same order as `params.tensors`).
///
/// `a_i` is the mean (mean-pool) or per-head softmax-attention-weighted sum
/// (attention) of transformed neighbour features; an empty neighbourhood
/// gives `a_i = 0`. Then `z_i = leaky_relu([v_i W_self || a_i] W_comb + b)`,
/// with the self block zeroed when `include_self` is false.
pub fn encode_batch(
    tape: &mut Tape,
    params: &WeakLearnerParams,
    param_vars: &[Var],
    features: &Tensor,
    samples: &[NeighborhoodSample],
    include_self: bool,
) -> Result<Encoded> {
    let cfg = &params.config;
    if features.cols() != cfg.input_dim {
        return Err(Error::invalid(format!(
            "feature dimension {} does not match encoder input_dim {}",
            features.cols(),
            cfg.input_dim
        )));
    }
    let layout = params.layout();
    let dv = cfg.input_dim;
    let n_centers = samples.len();

    let segments = Arc::new(Segments::from_lengths(
        samples.iter().map(|s| s.neighbor_ids.len()),
    ));
    let (center_rows, _) = gather_feature_rows(features, samples.iter().map(|s| s.center));
    let (neigh_rows, n_neigh) = gather_feature_rows(
        features,
        samples.iter().flat_map(|s| s.neighbor_ids.iter().copied()),
    );
    let xc = tape.constant_matrix(n_centers, dv, center_rows)?;
    let xn = tape.constant_matrix(n_neigh, dv, neigh_rows)?;

    let mut head_aggs = Vec::with_capacity(layout.heads.len());
    let mut attention = Vec::new();
    for &(w_idx, attn) in &layout.heads {
        let w = param_vars[w_idx];
        let pn = tape.matmul(xn, w)?;
        let agg = match (cfg.kind, attn) {
            (EncoderKind::Attention, Some((al, ar))) => {
                let pc = tape.matmul(xc, w)?;
                let ec = tape.matmul(pc, param_vars[al])?;
                let en = tape.matmul(pn, param_vars[ar])?;
                let owner: Arc<[usize]> = segments.row_owner().into();
                let ec_rows = tape.gather_rows(ec, owner)?;
                let scores = tape.add(ec_rows, en)?;
                let scores = tape.leaky_relu(scores)?;
                let weights = tape.segment_softmax(scores, segments.clone())?;
                attention.push(weights);
                let weighted = tape.mul(pn, weights)?;
                tape.segment_sum(weighted, segments.clone())?
            }
            _ => tape.segment_mean(pn, segments.clone())?,
        };
        head_aggs.push(agg);
    }
    let aggregate = if head_aggs.len() == 1 {
        head_aggs[0]
    } else {
        tape.concat_columns(&head_aggs)?
    };

    let self_part = if include_self {
        tape.matmul(xc, param_vars[layout.w_self])?
    } else {
        tape.constant(&Tensor::zeros(n_centers, cfg.embed_dim))
    };
    let joined = tape.concat_columns(&[self_part, aggregate])?;
    let pre = tape.matmul(joined, param_vars[layout.w_comb])?;
    let pre = tape.add(pre, param_vars[layout.b_comb])?;
    let embeddings = tape.leaky_relu(pre)?;
    Ok(Encoded {
        embeddings,
        aggregate,
        attention,
        segments,
    })
}

/// Single-center convenience wrapper; returns the `embed_dim` embedding.
pub fn encode(
    params: &WeakLearnerParams,
    features: &Tensor,
    sample: &NeighborhoodSample,
) -> Result<Vec<f64>> {
    let mut tape = Tape::new();
    let vars: Vec<Var> = params.tensors.iter().map(|t| tape.constant(t)).collect();
    let enc = encode_batch(
        &mut tape,
        params,
        &vars,
        features,
        std::slice::from_ref(sample),
        sample.include_self,
    )?;
    Ok(tape.value(enc.embeddings).to_vec())
}

/// `sigmoid(z_i . z_j)` for row pairs `(src[r], dst[r])` of `embeddings`.
pub fn decode_pairwise_batch(
    tape: &mut Tape,
    embeddings: Var,
    src: Arc<[usize]>,
    dst: Arc<[usize]>,
) -> Result<Var> {
    let a = tape.gather_rows(embeddings, src)?;
    let b = tape.gather_rows(embeddings, dst)?;
    let prod = tape.mul(a, b)?;
    let dot = tape.sum_cols(prod)?;
    Ok(tape.sigmoid(dot)?)
}

/// Plain-value pairwise decoder.
pub fn decode_pairwise(zi: &[f64], zj: &[f64]) -> f64 {
    let dot: f64 = zi.iter().zip(zj).map(|(a, b)| a * b).sum();
    if dot >= 0.0 {
        1.0 / (1.0 + (-dot).exp())
    } else {
        let e = dot.exp();
        e / (1.0 + e)
    }
}

/// `softmax(leaky_relu(z W1 + b1) W2 + b2)` per row.
pub fn decode_node_batch(
    tape: &mut Tape,
    params: &WeakLearnerParams,
    param_vars: &[Var],
    embeddings: Var,
) -> Result<Var> {
    let (w1, b1, w2, b2) = params
        .layout()
        .node_decoder
        .ok_or_else(|| Error::invalid("learner has no node decoder"))?;
    let h = tape.matmul(embeddings, param_vars[w1])?;
    let h = tape.add(h, param_vars[b1])?;
    let h = tape.leaky_relu(h)?;
    let o = tape.matmul(h, param_vars[w2])?;
    let o = tape.add(o, param_vars[b2])?;
    Ok(tape.softmax_rows(o)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnn::{EncoderConfig, EncoderKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample(center: usize, neighbors: &[usize]) -> NeighborhoodSample {
        NeighborhoodSample {
            center,
            neighbor_ids: neighbors.to_vec(),
            include_self: true,
            isolated: neighbors.is_empty(),
        }
    }

    fn identity(n: usize) -> Tensor {
        let mut t = Tensor::zeros(n, n);
        for i in 0..n {
            t.values_mut()[i * n + i] = 1.0;
        }
        t
    }

    fn params(
        kind: EncoderKind,
        dv: usize,
        dz: usize,
        heads: usize,
        seed: u64,
    ) -> WeakLearnerParams {
        let mut c = EncoderConfig::new(kind, dv, dz);
        c.num_heads = heads;
        WeakLearnerParams::init(&c, None, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    fn aggregate_of(
        p: &WeakLearnerParams,
        x: &Tensor,
        s: &[NeighborhoodSample],
    ) -> (Vec<f64>, Vec<Vec<f64>>) {
        let mut tape = Tape::new();
        let vars: Vec<Var> = p.tensors.iter().map(|t| tape.constant(t)).collect();
        let enc = encode_batch(&mut tape, p, &vars, x, s, true).unwrap();
        let att = enc
            .attention
            .iter()
            .map(|&a| tape.value(a).to_vec())
            .collect();
        (tape.value(enc.aggregate).to_vec(), att)
    }

    #[test]
    fn mean_pool_with_identity_transform() {
        let x = Tensor::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let mut p = params(EncoderKind::MeanPool, 2, 2, 1, 0);
        let w = p.layout().heads[0].0;
        p.tensors[w] = identity(2);
        let (agg, _) = aggregate_of(&p, &x, &[sample(0, &[1, 2])]);
        assert_eq!(agg, vec![0.5, 0.5]);
    }

    #[test]
    fn attention_single_neighbor_has_unit_weight() {
        let x = Tensor::from_rows(&[vec![0.3, -1.0], vec![2.0, 0.5]]).unwrap();
        let mut p = params(EncoderKind::Attention, 2, 2, 1, 1);
        let (agg1, att) = aggregate_of(&p, &x, &[sample(0, &[1])]);
        assert_eq!(att[0], vec![1.0]);
        let (_, (al, ar)) = {
            let h = p.layout().heads[0];
            (h.0, h.1.unwrap())
        };
        p.tensors[al] = Tensor::matrix(2, 1, vec![9.0, -4.0]).unwrap();
        p.tensors[ar] = Tensor::matrix(2, 1, vec![-7.0, 3.0]).unwrap();
        let (agg2, _) = aggregate_of(&p, &x, &[sample(0, &[1])]);
        assert_eq!(agg1, agg2);
    }

    #[test]
    fn attention_identical_neighbors_equals_mean_pool() {
        let x = Tensor::from_rows(&[
            vec![0.3, -1.0, 0.2],
            vec![1.0, 2.0, 3.0],
            vec![1.0, 2.0, 3.0],
            vec![1.0, 2.0, 3.0],
        ])
        .unwrap();
        let att = params(EncoderKind::Attention, 3, 4, 1, 2);
        let mut mean = params(EncoderKind::MeanPool, 3, 4, 1, 3);
        let w_att = att.layout().heads[0].0;
        let w_mean = mean.layout().heads[0].0;
        mean.tensors[w_mean] = att.tensors[w_att].clone();
        let s = [sample(0, &[1, 2, 3])];
        let (a, _) = aggregate_of(&att, &x, &s);
        let (m, _) = aggregate_of(&mean, &x, &s);
        for (u, v) in a.iter().zip(&m) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn isolated_center_uses_self_path_only() {
        let x = Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let p = params(EncoderKind::Attention, 2, 4, 2, 4);
        let (agg, _) = aggregate_of(&p, &x, &[sample(0, &[])]);
        assert!(agg.iter().all(|&v| v == 0.0));
        let z = encode(&p, &x, &sample(0, &[])).unwrap();
        assert_eq!(z.len(), 4);
    }

    #[test]
    fn feature_dim_mismatch_rejected() {
        let x = Tensor::zeros(2, 5);
        let p = params(EncoderKind::MeanPool, 3, 4, 1, 0);
        assert!(encode(&p, &x, &sample(0, &[1])).is_err());
    }

    #[test]
    fn pairwise_decoder_values() {
        assert_eq!(decode_pairwise(&[1.0, 0.0], &[0.0, 1.0]), 0.5);
        let z = [0.6, 0.8];
        let expected = 1.0 / (1.0 + (-1.0f64).exp());
        assert!((decode_pairwise(&z, &z) - expected).abs() < 1e-12);
        assert!((expected - 0.73106).abs() < 1e-5);
    }

    #[test]
    fn node_decoder_zero_init_is_uniform() {
        let mut c = EncoderConfig::new(EncoderKind::MeanPool, 2, 3);
        c.num_heads = 1;
        let mut p =
            WeakLearnerParams::init(&c, Some(4), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let (w1, b1, w2, b2) = p.layout().node_decoder.unwrap();
        for i in [w1, b1, w2, b2] {
            let (r, cc) = (p.tensors[i].rows(), p.tensors[i].cols());
            p.tensors[i] = Tensor::zeros(r, cc);
        }
        let mut tape = Tape::new();
        let vars: Vec<Var> = p.tensors.iter().map(|t| tape.constant(t)).collect();
        let z = tape.constant(&Tensor::zeros(1, 3));
        let r = decode_node_batch(&mut tape, &p, &vars, z).unwrap();
        assert_eq!(tape.value(r), &[0.25; 4]);
    }
}
