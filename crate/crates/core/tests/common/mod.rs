//! Oracles and fixtures shared by the integration tests.

#![allow(dead_code)]

use adagnn::gnn::{encode_batch, EncoderConfig, EncoderKind, WeakLearnerParams};
use adagnn::graphdata::NeighborhoodSample;
use adagnn::numcore::{NumError, OpKind, Tape, Tensor, Var};
use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Big = FBig<HalfEven, 2>;

pub const PRECISION: usize = 256;
pub const CLAMP: f64 = 1e-12;

pub fn big(x: f64) -> Big {
    Big::try_from(x).unwrap().with_precision(PRECISION).value()
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Direct evaluation of the SAMME.R update in 256-bit floats.
pub fn samme_r_oracle(weights: &[f64], labels: &[u8], scores: &[f64], lr: f64) -> Vec<f64> {
    let one = big(1.0);
    let raw: Vec<Big> = weights
        .iter()
        .zip(labels)
        .zip(scores)
        .map(|((&w, &y), &s)| {
            let s = big(s.clamp(CLAMP, 1.0 - CLAMP));
            let odds = s.ln() - (one.clone() - s).ln();
            let coded = if y == 1 { odds } else { -odds };
            big(w) * (big(-0.5 * lr) * coded).exp()
        })
        .collect();
    let total = raw.iter().fold(big(0.0), |acc, v| acc + v.clone());
    raw.into_iter()
        .map(|v| (v / total.clone()).to_f64().value())
        .collect()
}

/// Direct evaluation of one AdaBoost.R2 round in 256-bit floats:
/// `(weights, beta, coefficient)`, or `None` when the round is rejected or
/// the learner is perfect.
pub fn r2_oracle(weights: &[f64], labels: &[u8], scores: &[f64]) -> Option<(Vec<f64>, f64, f64)> {
    let raw: Vec<Big> = labels
        .iter()
        .zip(scores)
        .map(|(&y, &s)| big((f64::from(y) - s).abs()))
        .collect();
    let max = raw
        .iter()
        .cloned()
        .fold(big(0.0), |a, b| if b > a { b } else { a });
    if max == big(0.0) {
        return None;
    }
    let losses: Vec<Big> = raw.into_iter().map(|l| l / max.clone()).collect();
    let total = weights.iter().fold(big(0.0), |acc, &w| acc + big(w));
    let avg = weights
        .iter()
        .zip(&losses)
        .fold(big(0.0), |acc, (&w, l)| acc + big(w) * l.clone())
        / total;
    if avg >= big(0.5) || avg == big(0.0) {
        return None;
    }
    let beta = avg.clone() / (big(1.0) - avg);
    let ln_beta = beta.ln();
    let updated: Vec<Big> = weights
        .iter()
        .zip(&losses)
        .map(|(&w, l)| big(w) * ((big(1.0) - l.clone()) * ln_beta.clone()).exp())
        .collect();
    let sum = updated.iter().fold(big(0.0), |acc, v| acc + v.clone());
    Some((
        updated
            .into_iter()
            .map(|v| (v / sum.clone()).to_f64().value())
            .collect(),
        beta.to_f64().value(),
        (-ln_beta).to_f64().value(),
    ))
}

pub fn assert_close(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() <= tol, "{x} vs {y}");
    }
}

/// Rank of item `i`: one plus the number of items placed before it
/// (higher score, or equal score and smaller index).
pub fn rank_of(scores: &[f64], i: usize) -> usize {
    1 + (0..scores.len())
        .filter(|&j| scores[j] > scores[i] || (scores[j] == scores[i] && j < i))
        .count()
}

/// Definition-following AP: precision at each positive's rank, with the
/// precision obtained by counting positives ranked at or above it. Returns
/// the float value (summed in rank order) and the exact value as a
/// fraction over `840 * positives` (840 = lcm(1..=8)).
pub fn ap_oracle(scores: &[f64], labels: &[u8]) -> (f64, u64, u64) {
    let mut pos: Vec<(usize, usize)> = (0..scores.len())
        .filter(|&i| labels[i] == 1)
        .map(|i| {
            let r = rank_of(scores, i);
            let hits = (0..scores.len())
                .filter(|&j| labels[j] == 1 && rank_of(scores, j) <= r)
                .count();
            (r, hits)
        })
        .collect();
    pos.sort_unstable();
    let total: f64 = pos.iter().map(|&(r, h)| h as f64 / r as f64).sum();
    let num: u64 = pos.iter().map(|&(r, h)| h as u64 * (840 / r as u64)).sum();
    (total / pos.len() as f64, num, 840 * pos.len() as u64)
}

pub fn random(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Tensor {
    Tensor::matrix(
        rows,
        cols,
        (0..rows * cols).map(|_| rng.gen_range(lo..hi)).collect(),
    )
    .unwrap()
}

/// Values in `[-2, 2]` at least `1e-3` away from the leaky_relu kink.
pub fn off_kink(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    let values = (0..rows * cols)
        .map(|_| {
            let v: f64 = rng.gen_range(2e-3..2.0);
            if rng.gen() {
                v
            } else {
                -v
            }
        })
        .collect();
    Tensor::matrix(rows, cols, values).unwrap()
}

/// Reduces a non-scalar output to a scalar with fixed random coefficients,
/// so every output entry contributes a distinct gradient.
pub fn weighted_sum(tape: &mut Tape, out: Var, seed: u64) -> Result<Var, NumError> {
    let (m, n) = tape.shape(out);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
    let c = tape.constant_matrix(m, n, (0..m * n).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
    let p = tape.mul(out, c)?;
    tape.reduce_sum(p)
}

pub fn dims(rng: &mut ChaCha8Rng) -> (usize, usize) {
    (rng.gen_range(1..6), rng.gen_range(1..6))
}

/// Inputs for one listed op kind with random shapes.
pub fn listed_op_params(kind: OpKind, rng: &mut ChaCha8Rng) -> Vec<Tensor> {
    let (m, n) = dims(rng);
    match kind {
        OpKind::MatMul => {
            let k = rng.gen_range(1..6);
            vec![random(rng, m, k, -1.0, 1.0), random(rng, k, n, -1.0, 1.0)]
        }
        OpKind::Add | OpKind::ElementwiseMul => {
            vec![random(rng, m, n, -1.0, 1.0), random(rng, m, n, -1.0, 1.0)]
        }
        OpKind::ConcatColumns => {
            let k = rng.gen_range(1..4);
            vec![random(rng, m, n, -1.0, 1.0), random(rng, m, k, -1.0, 1.0)]
        }
        OpKind::Log => vec![random(rng, m, n, 0.2, 3.0)],
        OpKind::LeakyRelu => vec![off_kink(rng, m, n)],
        _ => vec![random(rng, m, n, -2.0, 2.0)],
    }
}

pub fn neighborhood(center: usize, ids: Vec<usize>) -> NeighborhoodSample {
    NeighborhoodSample {
        center,
        isolated: ids.is_empty(),
        neighbor_ids: ids,
        include_self: true,
    }
}

pub fn attention_params(dv: usize, dz: usize, heads: usize, seed: u64) -> WeakLearnerParams {
    let mut c = EncoderConfig::new(EncoderKind::Attention, dv, dz);
    c.num_heads = heads;
    WeakLearnerParams::init(&c, None, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

pub fn random_features(n: usize, d: usize, seed: u64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor::matrix(n, d, (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

pub fn to_num(e: adagnn::Error) -> NumError {
    match e {
        adagnn::Error::Num(n) => n,
        other => panic!("unexpected error {other}"),
    }
}

/// Per-head attention rows and flattened embeddings of one batch.
pub fn attention_weights(
    params: &WeakLearnerParams,
    x: &Tensor,
    s: &[NeighborhoodSample],
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut tape = Tape::new();
    let vars: Vec<Var> = params.tensors.iter().map(|t| tape.constant(t)).collect();
    let enc = encode_batch(&mut tape, params, &vars, x, s, true).unwrap();
    (
        enc.attention
            .iter()
            .map(|&a| tape.value(a).to_vec())
            .collect(),
        tape.value(enc.embeddings).to_vec(),
    )
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
