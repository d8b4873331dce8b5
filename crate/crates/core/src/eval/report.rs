use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::margin::{margin_distribution, MarginRecord};
use crate::{Error, Result};

/// Metrics of the ensemble formed by the first `round` learners.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RoundMetrics {
    pub round: usize,
    pub train_ap: Option<f64>,
    pub val_ap: Option<f64>,
    pub test_ap: Option<f64>,
    pub rec_train_ap: Option<f64>,
    pub rec_val_ap: Option<f64>,
    pub rec_test_ap: Option<f64>,
    /// Weighted misclassification rate of this round's learner on its own
    /// training examples.
    pub weighted_train_error: f64,
    /// Ensemble error on the training evaluation set.
    pub train_error: f64,
    pub test_error: f64,
    pub generalization_gap: f64,
    /// Fraction of training evaluation examples with margin `<= 0`.
    pub train_nonpositive_margin: Option<f64>,
    /// Examples misclassified after the previous round and correct now.
    pub corrected: usize,
    /// Normalized combination coefficients after this round.
    pub alphas: Vec<f64>,
    pub learner_epochs: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// `"baseline"` for a single learner, `"adagnn"` otherwise.
    pub label: String,
    pub task: String,
    pub algorithm: String,
    pub eval_seed: u64,
    pub rounds: Vec<RoundMetrics>,
    pub stop_reason: Option<String>,
    /// Margins of the final ensemble on the training evaluation set.
    pub train_margins: Vec<MarginRecord>,
    pub test_margins: Vec<MarginRecord>,
    /// Share of test examples touching a node unseen in training.
    pub unseen_test_fraction: Option<f64>,
    #[serde(skip)]
    pub runtime_seconds: f64,
}

impl MetricsReport {
    pub fn final_round(&self) -> Option<&RoundMetrics> {
        self.rounds.last()
    }

    /// Round `k` metrics, or the last round when boosting stopped earlier.
    pub fn at_round(&self, k: usize) -> Option<&RoundMetrics> {
        self.rounds.iter().take_while(|r| r.round <= k).last()
    }

    pub fn validate(&self) -> Result<()> {
        for (i, r) in self.rounds.iter().enumerate() {
            if r.round != i + 1 {
                return Err(Error::invalid(format!(
                    "round index {} at position {i}",
                    r.round
                )));
            }
            for ap in [
                r.train_ap,
                r.val_ap,
                r.test_ap,
                r.rec_train_ap,
                r.rec_val_ap,
                r.rec_test_ap,
            ]
            .into_iter()
            .flatten()
            {
                if !(0.0..=1.0).contains(&ap) {
                    return Err(Error::invalid(format!(
                        "AP {ap} outside [0, 1] in round {}",
                        r.round
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// One row of the error-curve table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorCurveRow {
    pub k: usize,
    pub train_error: f64,
    pub test_error: f64,
    pub gap: f64,
}

/// Train/test error against the number of learners, from one run's rounds.
pub fn error_curves(report: &MetricsReport) -> Result<Vec<ErrorCurveRow>> {
    report.validate()?;
    Ok(report
        .rounds
        .iter()
        .map(|r| ErrorCurveRow {
            k: r.round,
            train_error: r.train_error,
            test_error: r.test_error,
            gap: (r.test_error - r.train_error).abs(),
        })
        .collect())
}

/// Error curves assembled from separate runs, one per `K`. Each entry pairs
/// the run's split seed with its report; all seeds must agree. Each report
/// contributes its final round.
pub fn error_curves_from_runs(reports: &[(u64, &MetricsReport)]) -> Result<Vec<ErrorCurveRow>> {
    if let Some((first, _)) = reports.first() {
        if reports.iter().any(|(s, _)| s != first) {
            return Err(Error::invalid(
                "error_curves: reports come from different splits",
            ));
        }
    }
    let mut rows = Vec::with_capacity(reports.len());
    for (i, (_, rep)) in reports.iter().enumerate() {
        let r = rep
            .final_round()
            .ok_or_else(|| Error::invalid("error_curves: report without rounds"))?;
        if r.round != i + 1 {
            return Err(Error::invalid(format!(
                "error_curves: expected K={}, found K={}",
                i + 1,
                r.round
            )));
        }
        rows.push(ErrorCurveRow {
            k: r.round,
            train_error: r.train_error,
            test_error: r.test_error,
            gap: (r.test_error - r.train_error).abs(),
        });
    }
    Ok(rows)
}

pub fn write_error_curves_csv<W: Write>(rows: &[ErrorCurveRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Cumulative margin distribution, one row per theta, one column per round
/// supplied.
pub fn write_margin_csv<W: Write>(
    curves: &[(String, &[MarginRecord])],
    thetas: &[f64],
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["theta".to_string()];
    header.extend(curves.iter().map(|(name, _)| name.clone()));
    w.write_record(&header).map_err(csv_err)?;
    let columns = curves
        .iter()
        .map(|(_, recs)| margin_distribution(recs, thetas))
        .collect::<Result<Vec<_>>>()?;
    for (i, t) in thetas.iter().enumerate() {
        let mut row = vec![format!("{t}")];
        row.extend(columns.iter().map(|c| format!("{}", c[i])));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::invalid(format!("csv: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(rounds: usize) -> MetricsReport {
        MetricsReport {
            rounds: (1..=rounds)
                .map(|k| RoundMetrics {
                    round: k,
                    train_error: 0.1 / k as f64,
                    test_error: 0.2,
                    ..RoundMetrics::default()
                })
                .collect(),
            ..MetricsReport::default()
        }
    }

    #[test]
    fn curves_are_dense() {
        let rows = error_curves(&report(4)).unwrap();
        assert_eq!(
            rows.iter().map(|r| r.k).collect::<Vec<_>>(),
            vec![1, 2, 3, 4]
        );
        assert!((rows[0].gap - 0.1).abs() < 1e-15);
    }

    #[test]
    fn runs_from_other_splits_rejected() {
        let (a, b) = (report(1), report(2));
        assert!(error_curves_from_runs(&[(1, &a), (2, &b)]).is_err());
        let rows = error_curves_from_runs(&[(1, &a), (1, &b)]).unwrap();
        assert_eq!(rows[1].k, 2);
    }

    #[test]
    fn at_round_falls_back_to_last() {
        let r = report(3);
        assert_eq!(r.at_round(2).unwrap().round, 2);
        assert_eq!(r.at_round(10).unwrap().round, 3);
    }

    #[test]
    fn csv_output() {
        let mut buf = Vec::new();
        write_error_curves_csv(&error_curves(&report(2)).unwrap(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("k,train_error,test_error,gap\n1,"));
    }
}
