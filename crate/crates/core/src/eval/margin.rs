use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `(y - tau)(f - tau)`.
pub fn margin(label: u8, score: f64, tau: f64) -> f64 {
    (f64::from(label) - tau) * (score - tau)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginRecord {
    pub example: usize,
    pub label: u8,
    pub score: f64,
    pub tau: f64,
    pub margin: f64,
}

impl MarginRecord {
    pub fn new(example: usize, label: u8, score: f64, tau: f64) -> Self {
        Self {
            example,
            label,
            score,
            tau,
            margin: margin(label, score, tau),
        }
    }

    /// Thresholded prediction matches the label.
    pub fn is_correct(&self) -> bool {
        (self.score > self.tau) == (self.label == 1)
    }
}

pub fn margin_records(labels: &[u8], scores: &[f64], tau: f64) -> Vec<MarginRecord> {
    labels
        .iter()
        .zip(scores)
        .enumerate()
        .map(|(i, (&y, &s))| MarginRecord::new(i, y, s, tau))
        .collect()
}

/// Fraction of records with margin `<= theta`, for each theta.
pub fn margin_distribution(records: &[MarginRecord], thetas: &[f64]) -> Result<Vec<f64>> {
    if thetas.is_empty() {
        return Err(Error::invalid("margin_distribution: empty theta grid"));
    }
    if records.is_empty() {
        return Err(Error::invalid("margin_distribution: no records"));
    }
    let mut margins: Vec<f64> = records.iter().map(|r| r.margin).collect();
    margins.sort_by(f64::total_cmp);
    let n = margins.len() as f64;
    Ok(thetas
        .iter()
        .map(|&t| margins.partition_point(|&m| m <= t) as f64 / n)
        .collect())
}

/// Evenly spaced grid over `[-0.25, 0.25]` with `points` entries.
pub fn default_theta_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..points)
            .map(|i| -0.25 + 0.5 * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

/// Fraction of records with margin `<= 0`.
pub fn nonpositive_margin_fraction(records: &[MarginRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    records.iter().filter(|r| r.margin <= 0.0).count() as f64 / records.len() as f64
}

/// `1 - accuracy` at threshold `tau`.
pub fn threshold_error(labels: &[u8], scores: &[f64], tau: f64) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let wrong = labels
        .iter()
        .zip(scores)
        .filter(|(&y, &s)| (s > tau) != (y == 1))
        .count();
    wrong as f64 / labels.len() as f64
}
