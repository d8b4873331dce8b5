use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::numcore::clamp_prob;
use crate::{Error, Result};

/// Uniform weights `1/n`.
pub fn init_weights(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("init_weights: no examples"));
    }
    Ok(vec![1.0 / n as f64; n])
}

/// Divides by the sum.
pub fn renormalize(weights: &mut [f64]) -> Result<()> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::invalid(format!(
            "cannot renormalize weights summing to {total}"
        )));
    }
    for w in weights.iter_mut() {
        *w /= total;
    }
    Ok(())
}

/// Binary coded-label log-odds: `log s - log(1 - s)` for label 1 and its
/// negation for label 0, with `s` clamped.
pub fn coded_log_odds(label: u8, score: f64) -> f64 {
    let s = clamp_prob(score);
    let odds = s.ln() - (1.0 - s).ln();
    if label == 1 {
        odds
    } else {
        -odds
    }
}

fn check_lengths(what: &str, a: usize, b: usize, c: usize) -> Result<()> {
    if a != b || a != c {
        return Err(Error::invalid(format!(
            "{what}: {a} weights, {b} labels, {c} scores"
        )));
    }
    Ok(())
}

/// `w_i <- w_i exp(-alpha/2 * coded_i)`, then renormalized.
pub fn samme_r_update(
    weights: &[f64],
    labels: &[u8],
    scores: &[f64],
    boost_lr: f64,
) -> Result<Vec<f64>> {
    check_lengths("samme_r_update", weights.len(), labels.len(), scores.len())?;
    let mut out: Vec<f64> = weights
        .iter()
        .zip(labels)
        .zip(scores)
        .map(|((&w, &y), &s)| w * (-0.5 * boost_lr * coded_log_odds(y, s)).exp())
        .collect();
    renormalize(&mut out)?;
    Ok(out)
}

/// Multi-class form for distribution labels over `C` classes: the coded
/// label is `(C y_c - 1)/(C - 1)` and the exponent is
/// `-alpha (C - 1)/C * coded^T log r`. For `C = 2` and one-hot labels this
/// is the binary update.
pub fn samme_r_node_update(
    weights: &[f64],
    labels: &[&[f64]],
    predictions: &[&[f64]],
    boost_lr: f64,
) -> Result<Vec<f64>> {
    check_lengths(
        "samme_r_node_update",
        weights.len(),
        labels.len(),
        predictions.len(),
    )?;
    let mut out = Vec::with_capacity(weights.len());
    for ((&w, y), r) in weights.iter().zip(labels).zip(predictions) {
        let c = y.len();
        if c < 2 || r.len() != c {
            return Err(Error::invalid(
                "samme_r_node_update: need matching rows with at least two classes",
            ));
        }
        let cf = c as f64;
        let dot: f64 = y
            .iter()
            .zip(r.iter())
            .map(|(&yc, &rc)| (cf * yc - 1.0) / (cf - 1.0) * clamp_prob(rc).ln())
            .sum();
        out.push(w * (-boost_lr * (cf - 1.0) / cf * dot).exp());
    }
    renormalize(&mut out)?;
    Ok(out)
}

/// Caps every weight at `cap` and hands the excess to the uncapped
/// weights in proportion to their size, repeating until none exceeds it.
/// Needs `cap * n >= 1` to be satisfiable; otherwise weights are returned
/// unchanged.
pub fn cap_weights(weights: &mut [f64], cap: f64) {
    if cap * weights.len() as f64 + 1e-15 < 1.0 {
        return;
    }
    let mut capped = vec![false; weights.len()];
    loop {
        let mut excess = 0.0;
        for (w, c) in weights.iter_mut().zip(capped.iter_mut()) {
            if *w > cap {
                excess += *w - cap;
                *w = cap;
                *c = true;
            }
        }
        if excess <= 0.0 {
            return;
        }
        let free: f64 = weights
            .iter()
            .zip(&capped)
            .filter(|(_, c)| !**c)
            .map(|(w, _)| w)
            .sum();
        if free <= 0.0 {
            return;
        }
        for (w, c) in weights.iter_mut().zip(&capped) {
            if !c {
                *w += excess * *w / free;
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum R2Status {
    Accepted,
    /// Average loss zero, `beta = 0`.
    PerfectLearner,
    /// Average loss at least 0.5.
    Rejected,
}

#[derive(Clone, Debug, PartialEq)]
pub struct R2Round {
    pub weights: Vec<f64>,
    pub average_loss: f64,
    pub beta: f64,
    /// `log(1/beta)`, capped at `log(1/1e-12)` for a perfect learner.
    pub coefficient: f64,
    pub status: R2Status,
    /// Indices of a weighted bootstrap of size `n` over the updated weights.
    pub bootstrap: Vec<usize>,
}

const MIN_BETA: f64 = 1e-12;

/// The weight recurrence on already-normalized losses `L_i` in `[0, 1]`:
/// `beta = Lbar/(1 - Lbar)`, `w_i <- w_i beta^(1 - L_i)`, renormalized.
/// Rejected and perfect rounds leave the weights unchanged.
pub fn r2_update_from_losses(
    weights: &[f64],
    losses: &[f64],
) -> Result<(Vec<f64>, f64, f64, R2Status)> {
    if weights.len() != losses.len() || weights.is_empty() {
        return Err(Error::invalid(
            "r2 update: weight and loss lengths differ or are empty",
        ));
    }
    let total: f64 = weights.iter().sum();
    let avg: f64 = weights.iter().zip(losses).map(|(w, l)| w * l).sum::<f64>() / total;
    if avg >= 0.5 {
        return Ok((weights.to_vec(), avg, avg / (1.0 - avg), R2Status::Rejected));
    }
    if avg <= 0.0 {
        return Ok((weights.to_vec(), 0.0, 0.0, R2Status::PerfectLearner));
    }
    let beta = avg / (1.0 - avg);
    let mut out: Vec<f64> = weights
        .iter()
        .zip(losses)
        .map(|(w, l)| w * beta.powf(1.0 - l))
        .collect();
    renormalize(&mut out)?;
    Ok((out, avg, beta, R2Status::Accepted))
}

/// Draws `n` indices with probability proportional to `weights`.
pub fn weighted_bootstrap(weights: &[f64], n: usize, seed: u64) -> Result<Vec<usize>> {
    let dist =
        WeightedIndex::new(weights).map_err(|e| Error::invalid(format!("bootstrap: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| dist.sample(&mut rng)).collect())
}

/// One AdaBoost.R2 round with linear loss `|y - s|` divided by its maximum.
pub fn adaboost_r2_round(
    weights: &[f64],
    labels: &[u8],
    scores: &[f64],
    seed: u64,
) -> Result<R2Round> {
    check_lengths(
        "adaboost_r2_round",
        weights.len(),
        labels.len(),
        scores.len(),
    )?;
    if scores.iter().any(|s| !(0.0..=1.0).contains(s)) {
        return Err(Error::invalid(
            "adaboost_r2_round: scores must lie in [0, 1]",
        ));
    }
    let mut losses: Vec<f64> = labels
        .iter()
        .zip(scores)
        .map(|(&y, &s)| (f64::from(y) - s).abs())
        .collect();
    let max = losses.iter().cloned().fold(0.0, f64::max);
    if max > 0.0 {
        for l in &mut losses {
            *l /= max;
        }
    }
    let (weights, average_loss, beta, status) = r2_update_from_losses(weights, &losses)?;
    let bootstrap = weighted_bootstrap(&weights, weights.len(), seed)?;
    Ok(R2Round {
        coefficient: (1.0 / beta.max(MIN_BETA)).ln(),
        weights,
        average_loss,
        beta,
        status,
        bootstrap,
    })
}
