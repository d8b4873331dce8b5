use crate::gnn::{predict_nodes, score_edges, WeakLearnerParams};
use crate::graphdata::{Adjacency, EdgeExample};
use crate::numcore::Tensor;
use crate::{Error, Result};

fn normalized(alphas: &[f64]) -> Result<Vec<f64>> {
    if alphas.is_empty() {
        return Err(Error::invalid("no learners to combine"));
    }
    if alphas.iter().any(|&a| !(a >= 0.0 && a.is_finite())) {
        return Err(Error::invalid(
            "combination coefficients must be finite and non-negative",
        ));
    }
    let total: f64 = alphas.iter().sum();
    if total <= 0.0 {
        return Err(Error::invalid("combination coefficients sum to zero"));
    }
    Ok(alphas.iter().map(|a| a / total).collect())
}

/// `sum_k alpha_k s_k` per example, clamped into `[min_k s_k, max_k s_k]`
/// against rounding.
pub fn combine_scores(per_learner: &[Vec<f64>], alphas: &[f64]) -> Result<Vec<f64>> {
    let a = normalized(alphas)?;
    if per_learner.len() != a.len() {
        return Err(Error::invalid(
            "combine_scores: one score vector per learner expected",
        ));
    }
    let n = per_learner[0].len();
    if per_learner.iter().any(|s| s.len() != n) {
        return Err(Error::invalid(
            "combine_scores: score vectors differ in length",
        ));
    }
    Ok((0..n)
        .map(|i| {
            let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
            for (s, w) in per_learner.iter().zip(&a) {
                lo = lo.min(s[i]);
                hi = hi.max(s[i]);
                sum += w * s[i];
            }
            sum.clamp(lo, hi)
        })
        .collect())
}

/// Convex combination of per-learner distributions, renormalized per row.
pub fn combine_distributions(
    per_learner: &[Vec<Vec<f64>>],
    alphas: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let a = normalized(alphas)?;
    if per_learner.len() != a.len() {
        return Err(Error::invalid(
            "combine_distributions: one table per learner expected",
        ));
    }
    let n = per_learner[0].len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let c = per_learner[0][i].len();
        let mut row = vec![0.0; c];
        for (table, w) in per_learner.iter().zip(&a) {
            if table.len() != n || table[i].len() != c {
                return Err(Error::invalid("combine_distributions: shape mismatch"));
            }
            for (r, v) in row.iter_mut().zip(&table[i]) {
                *r += w * v;
            }
        }
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|r| *r /= total);
        out.push(row);
    }
    Ok(out)
}

/// Ensemble similarity of one pair under each learner's `alpha`.
pub fn combine_pairwise(
    learners: &[WeakLearnerParams],
    features: &Tensor,
    adj: &Adjacency,
    pair: (usize, usize),
    eval_seed: u64,
) -> Result<f64> {
    let query = [EdgeExample::observed(pair.0, pair.1, None)];
    let scores = learners
        .iter()
        .map(|l| score_edges(l, features, adj, &query, eval_seed))
        .collect::<Result<Vec<_>>>()?;
    let alphas: Vec<f64> = learners.iter().map(|l| l.alpha).collect();
    Ok(combine_scores(&scores, &alphas)?[0])
}

/// Ensemble recommendation distribution of one node.
pub fn combine_node(
    learners: &[WeakLearnerParams],
    features: &Tensor,
    adj: &Adjacency,
    node: usize,
    eval_seed: u64,
) -> Result<Vec<f64>> {
    let tables = learners
        .iter()
        .map(|l| predict_nodes(l, features, adj, &[node], eval_seed))
        .collect::<Result<Vec<_>>>()?;
    let alphas: Vec<f64> = learners.iter().map(|l| l.alpha).collect();
    Ok(combine_distributions(&tables, &alphas)?.remove(0))
}
