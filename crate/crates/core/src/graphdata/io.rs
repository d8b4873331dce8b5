use std::collections::HashMap;
use std::path::Path;

use super::{Edge, Graph, GraphError};
use crate::numcore::Tensor;

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn is_edge_header(rec: &csv::StringRecord) -> bool {
    matches!(
        rec.get(0).map(str::to_ascii_lowercase).as_deref(),
        Some("src" | "source")
    )
}

/// Reads `src,dst[,timestamp]` rows. Node ids are arbitrary strings, compacted
/// to `0..n` in order of first appearance. A first row starting with `src`
/// is treated as a header.
pub fn load_edge_csv(path: impl AsRef<Path>, has_timestamps: bool) -> Result<Graph, GraphError> {
    let text = std::fs::read_to_string(path)?;
    load_edge_csv_str(&text, has_timestamps)
}

pub fn load_edge_csv_str(text: &str, has_timestamps: bool) -> Result<Graph, GraphError> {
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut names: Vec<String> = Vec::new();
    let mut edges = Vec::new();
    let mut intern = |s: &str| -> usize {
        if let Some(&i) = ids.get(s) {
            return i;
        }
        let i = names.len();
        ids.insert(s.to_string(), i);
        names.push(s.to_string());
        i
    };
    let expected = if has_timestamps { 3 } else { 2 };
    for (i, rec) in reader(text).records().enumerate() {
        let line = i + 1;
        let rec = rec.map_err(|e| GraphError::Malformed {
            line,
            reason: e.to_string(),
        })?;
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        if i == 0 && is_edge_header(&rec) {
            continue;
        }
        if rec.len() != expected {
            return Err(GraphError::Malformed {
                line,
                reason: format!("expected {expected} fields, found {}", rec.len()),
            });
        }
        let (src, dst) = (&rec[0], &rec[1]);
        if src.is_empty() || dst.is_empty() {
            return Err(GraphError::Malformed {
                line,
                reason: "empty node id".into(),
            });
        }
        let timestamp = if has_timestamps {
            let t: f64 = rec[2].parse().map_err(|_| GraphError::Malformed {
                line,
                reason: format!("bad timestamp {:?}", &rec[2]),
            })?;
            if t < 0.0 || !t.is_finite() {
                return Err(GraphError::NegativeTimestamp { line, value: t });
            }
            Some(t)
        } else {
            None
        };
        let (s, d) = (intern(src), intern(dst));
        edges.push(Edge {
            src: s,
            dst: d,
            timestamp,
        });
    }
    Graph::new(names.len(), edges)?.with_node_ids(names)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureFormat {
    Csv,
    Json,
}

impl FeatureFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => FeatureFormat::Json,
            _ => FeatureFormat::Csv,
        }
    }
}

/// Attaches one feature row per node, keyed by the node's external id.
/// Rows must be non-zero unless `allow_zero` is set.
pub fn load_node_features(
    path: impl AsRef<Path>,
    graph: Graph,
    allow_zero: bool,
) -> Result<Graph, GraphError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    load_node_features_str(&text, FeatureFormat::from_path(path), graph, allow_zero)
}

pub fn load_node_features_str(
    text: &str,
    format: FeatureFormat,
    graph: Graph,
    allow_zero: bool,
) -> Result<Graph, GraphError> {
    let rows: Vec<(String, Vec<f64>)> = match format {
        FeatureFormat::Csv => parse_feature_csv(text)?,
        FeatureFormat::Json => {
            let map: std::collections::BTreeMap<String, Vec<f64>> = serde_json::from_str(text)
                .map_err(|e| GraphError::Malformed {
                    line: e.line(),
                    reason: e.to_string(),
                })?;
            map.into_iter().collect()
        }
    };
    if rows.len() != graph.num_nodes() {
        // Name duplicates before the count mismatch they cause.
        let mut seen = std::collections::HashSet::new();
        if let Some((id, _)) = rows.iter().find(|(id, _)| !seen.insert(id.as_str())) {
            return Err(GraphError::DuplicateNode(id.clone()));
        }
        return Err(GraphError::FeatureRowCount {
            expected: graph.num_nodes(),
            found: rows.len(),
        });
    }
    let index: HashMap<&str, usize> = graph
        .node_ids()
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let dim = rows.first().map_or(0, |(_, r)| r.len());
    let mut slots: Vec<Option<Vec<f64>>> = vec![None; graph.num_nodes()];
    for (id, row) in rows {
        if row.len() != dim {
            return Err(GraphError::FeatureDim {
                node: id,
                expected: dim,
                found: row.len(),
            });
        }
        let &i = index
            .get(id.as_str())
            .ok_or_else(|| GraphError::UnknownNode(id.clone()))?;
        if slots[i].is_some() {
            return Err(GraphError::DuplicateNode(id));
        }
        if !allow_zero && row.iter().all(|&v| v == 0.0) {
            return Err(GraphError::ZeroFeatureRow(id));
        }
        slots[i] = Some(row);
    }
    let mut values = Vec::with_capacity(graph.num_nodes() * dim);
    for (i, slot) in slots.into_iter().enumerate() {
        let row = slot.ok_or_else(|| GraphError::MissingNode(graph.node_ids()[i].clone()))?;
        values.extend(row);
    }
    let features = Tensor::matrix(graph.num_nodes(), dim, values).expect("rows checked");
    graph.with_node_features(features)
}

fn parse_feature_csv(text: &str) -> Result<Vec<(String, Vec<f64>)>, GraphError> {
    let mut out = Vec::new();
    for (i, rec) in reader(text).records().enumerate() {
        let line = i + 1;
        let rec = rec.map_err(|e| GraphError::Malformed {
            line,
            reason: e.to_string(),
        })?;
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        if i == 0
            && rec
                .get(0)
                .is_some_and(|f| f.eq_ignore_ascii_case("node_id"))
        {
            continue;
        }
        let id = rec[0].to_string();
        let row = rec
            .iter()
            .skip(1)
            .map(|f| {
                f.parse::<f64>().map_err(|_| GraphError::Malformed {
                    line,
                    reason: format!("bad feature value {f:?}"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        out.push((id, row));
    }
    Ok(out)
}
