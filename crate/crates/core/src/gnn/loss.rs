//! Weighted training losses. Probabilities go through the clamped log.

use crate::numcore::{Tape, Var};
use crate::{Error, Result};

fn check_weights(weights: &[f64]) -> Result<()> {
    match weights.iter().position(|&w| !(w > 0.0 && w.is_finite())) {
        Some(i) => Err(Error::invalid(format!(
            "weight {i} is not positive: {}",
            weights[i]
        ))),
        None => Ok(()),
    }
}

/// `-sum_i w_i [y_i log s_i + (1 - y_i) log(1 - s_i)]` for an `(m, 1)`
/// column of predicted probabilities.
pub fn link_loss(tape: &mut Tape, scores: Var, labels: &[u8], weights: &[f64]) -> Result<Var> {
    let (m, c) = tape.shape(scores);
    if c != 1 || labels.len() != m || weights.len() != m {
        return Err(Error::invalid(format!(
            "link_loss: {m}x{c} scores with {} labels and {} weights",
            labels.len(),
            weights.len()
        )));
    }
    check_weights(weights)?;
    let pos: Vec<f64> = labels
        .iter()
        .zip(weights)
        .map(|(&y, &w)| -w * f64::from(y))
        .collect();
    let neg: Vec<f64> = labels
        .iter()
        .zip(weights)
        .map(|(&y, &w)| -w * f64::from(1 - y.min(1)))
        .collect();
    let log_s = tape.log_clamped(scores)?;
    let one_minus = tape.affine(scores, -1.0, 1.0)?;
    let log_1ms = tape.log_clamped(one_minus)?;
    let pos = tape.constant_matrix(m, 1, pos)?;
    let neg = tape.constant_matrix(m, 1, neg)?;
    let a = tape.mul(log_s, pos)?;
    let b = tape.mul(log_1ms, neg)?;
    let a = tape.reduce_sum(a)?;
    let b = tape.reduce_sum(b)?;
    Ok(tape.add(a, b)?)
}

/// `-sum_i w_i y_i^T log r_i` for `(m, C)` predicted distributions and
/// normalized label rows.
pub fn node_loss(
    tape: &mut Tape,
    predictions: Var,
    labels: &[&[f64]],
    weights: &[f64],
) -> Result<Var> {
    let (m, c) = tape.shape(predictions);
    if labels.len() != m || weights.len() != m {
        return Err(Error::invalid(format!(
            "node_loss: {m} predictions with {} labels and {} weights",
            labels.len(),
            weights.len()
        )));
    }
    check_weights(weights)?;
    let mut coef = Vec::with_capacity(m * c);
    for (i, (y, &w)) in labels.iter().zip(weights).enumerate() {
        let sum: f64 = y.iter().sum();
        if y.len() != c || y.iter().any(|&v| v < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "node_loss: label row {i} is not a normalized distribution"
            )));
        }
        coef.extend(y.iter().map(|&v| -w * v));
    }
    let log_r = tape.log_clamped(predictions)?;
    let coef = tape.constant_matrix(m, c, coef)?;
    let prod = tape.mul(log_r, coef)?;
    Ok(tape.reduce_sum(prod)?)
}

/// `mix * link + (1 - mix) * node`.
pub fn multitask_loss(tape: &mut Tape, link: Var, node: Var, mix: f64) -> Result<Var> {
    if !(0.0..=1.0).contains(&mix) {
        return Err(Error::invalid(format!("mix must lie in [0, 1], got {mix}")));
    }
    if mix == 1.0 {
        return Ok(link);
    }
    if mix == 0.0 {
        return Ok(node);
    }
    let a = tape.affine(link, mix, 0.0)?;
    let b = tape.affine(node, 1.0 - mix, 0.0)?;
    Ok(tape.add(a, b)?)
}
