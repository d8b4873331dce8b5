//! Ranking metrics, margins, error curves and embedding export.

mod ap;
mod embed;
mod margin;
mod report;

pub use ap::{average_precision, ranking, recommendation_ap};
pub use embed::{
    export_embeddings, spearman, write_embeddings_csv, EmbeddingExport, NeighborRanks,
};
pub use margin::{
    default_theta_grid, margin, margin_distribution, margin_records, nonpositive_margin_fraction,
    threshold_error, MarginRecord,
};
pub use report::{
    error_curves, error_curves_from_runs, write_error_curves_csv, write_margin_csv, ErrorCurveRow,
    MetricsReport, RoundMetrics,
};
