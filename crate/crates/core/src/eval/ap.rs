use crate::{Error, Result};

/// Ranking order: descending score, ties by ascending index.
pub fn ranking(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// Non-interpolated average precision: the mean, over positives, of the
/// precision at each positive's rank.
pub fn average_precision(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::invalid(format!(
            "average_precision: {} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("average_precision: NaN score"));
    }
    let mut hits = 0usize;
    let mut total = 0.0;
    for (rank, &i) in ranking(scores).iter().enumerate() {
        if labels[i] != 0 {
            hits += 1;
            total += hits as f64 / (rank + 1) as f64;
        }
    }
    if hits == 0 {
        return Err(Error::invalid("average_precision: no positive labels"));
    }
    Ok(total / hits as f64)
}

/// AP over every (node, class) cell, a cell being relevant when its label
/// mass is positive.
pub fn recommendation_ap(predictions: &[Vec<f64>], labels: &[Vec<f64>]) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(Error::invalid("recommendation_ap: row count mismatch"));
    }
    let mut scores = Vec::new();
    let mut flags = Vec::new();
    for (p, y) in predictions.iter().zip(labels) {
        if p.len() != y.len() {
            return Err(Error::invalid("recommendation_ap: class count mismatch"));
        }
        scores.extend_from_slice(p);
        flags.extend(y.iter().map(|&v| u8::from(v > 0.0)));
    }
    average_precision(&scores, &flags)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example() {
        let ap = average_precision(&[0.9, 0.8, 0.7], &[1, 0, 1]).unwrap();
        assert!((ap - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
        assert!((ap - 0.83333).abs() < 1e-5);
    }

    #[test]
    fn perfect_ranking_is_one() {
        assert_eq!(
            average_precision(&[0.1, 0.9, 0.8, 0.2], &[0, 1, 1, 0]).unwrap(),
            1.0
        );
    }

    #[test]
    fn ties_break_by_index() {
        assert_eq!(average_precision(&[0.5, 0.5], &[1, 0]).unwrap(), 1.0);
        assert_eq!(average_precision(&[0.5, 0.5], &[0, 1]).unwrap(), 0.5);
    }

    #[test]
    fn no_positives_rejected() {
        assert!(average_precision(&[0.5, 0.2], &[0, 0]).is_err());
    }
}
