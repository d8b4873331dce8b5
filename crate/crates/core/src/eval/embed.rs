//! Per-learner embedding tables and nearest-neighbour rank analysis.

use std::io::Write;

use serde::Serialize;

use super::report::csv_err;
use crate::boosting::BoostState;
use crate::gnn::embed_nodes;
use crate::graphdata::Adjacency;
use crate::numcore::Tensor;
use crate::{Error, Result};

/// Ranks of a center node's neighbours in each embedding space.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NeighborRanks {
    pub center: usize,
    pub neighbors: Vec<usize>,
    /// `ranks[k][i]`: 1-based position of `neighbors[i]` when the exported
    /// nodes other than the center are sorted by inner product with the
    /// center in space `k`, largest first.
    pub ranks: Vec<Vec<usize>>,
}

impl NeighborRanks {
    /// Spearman correlation of the neighbour rankings for every learner pair
    /// `(a, b)` with `a < b`.
    pub fn pairwise_spearman(&self) -> Result<Vec<(usize, usize, f64)>> {
        let as_f64 = |r: &Vec<usize>| r.iter().map(|&v| v as f64).collect::<Vec<f64>>();
        let mut out = Vec::new();
        for a in 0..self.ranks.len() {
            for b in (a + 1)..self.ranks.len() {
                out.push((
                    a,
                    b,
                    spearman(&as_f64(&self.ranks[a]), &as_f64(&self.ranks[b]))?,
                ));
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingExport {
    pub nodes: Vec<usize>,
    /// One `nodes.len() x embed_dim` table per learner.
    pub tables: Vec<Tensor>,
    pub neighbor_ranks: Option<NeighborRanks>,
}

/// Embeds `nodes` in every learner's space. With `center`, also ranks the
/// center's neighbours (in `adj`) among the exported nodes per space.
pub fn export_embeddings(
    state: &BoostState,
    features: &Tensor,
    adj: &Adjacency,
    nodes: &[usize],
    center: Option<usize>,
    eval_seed: u64,
) -> Result<EmbeddingExport> {
    if state.learners.is_empty() {
        return Err(Error::invalid(
            "cannot export embeddings from an untrained state",
        ));
    }
    let include_self = state.task.uses_edges() || state.encoder.include_self_in_node_task;
    let tables = state
        .learners
        .iter()
        .map(|l| embed_nodes(l, features, adj, nodes, include_self, eval_seed))
        .collect::<Result<Vec<_>>>()?;
    let neighbor_ranks = match center {
        Some(c) => Some(neighbor_ranks(&tables, nodes, adj, c)?),
        None => None,
    };
    Ok(EmbeddingExport {
        nodes: nodes.to_vec(),
        tables,
        neighbor_ranks,
    })
}

fn neighbor_ranks(
    tables: &[Tensor],
    nodes: &[usize],
    adj: &Adjacency,
    center: usize,
) -> Result<NeighborRanks> {
    let row_of = |v: usize| nodes.iter().position(|&u| u == v);
    let c_row = row_of(center).ok_or_else(|| {
        Error::invalid(format!("center {center} is not among the exported nodes"))
    })?;
    let neighbors: Vec<usize> = adj
        .neighbors(center)
        .iter()
        .copied()
        .filter(|&v| v != center && row_of(v).is_some())
        .collect();
    if neighbors.is_empty() {
        return Err(Error::invalid(format!(
            "center {center} has no exported neighbours"
        )));
    }
    let ranks = tables
        .iter()
        .map(|t| {
            let zc = t.row(c_row);
            let mut order: Vec<(usize, f64)> = nodes
                .iter()
                .enumerate()
                .filter(|&(_, &v)| v != center)
                .map(|(r, &v)| (v, dot(zc, t.row(r))))
                .collect();
            order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            neighbors
                .iter()
                .map(|&v| {
                    order
                        .iter()
                        .position(|&(u, _)| u == v)
                        .map(|p| p + 1)
                        .unwrap_or(0)
                })
                .collect()
        })
        .collect();
    Ok(NeighborRanks {
        center,
        neighbors,
        ranks,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Average ranks, 1-based; ties share the mean of their positions.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let mean = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = mean;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation: Pearson correlation of average ranks.
/// Constant inputs have no defined correlation and are rejected.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::invalid(format!(
            "spearman needs two equal-length series of at least 2, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::invalid("spearman input is not finite"));
    }
    let (ra, rb) = (average_ranks(a), average_ranks(b));
    let mean = (a.len() as f64 + 1.0) / 2.0;
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - mean) * (y - mean);
        va += (x - mean) * (x - mean);
        vb += (y - mean) * (y - mean);
    }
    if va == 0.0 || vb == 0.0 {
        return Err(Error::invalid(
            "spearman is undefined for a constant series",
        ));
    }
    Ok(cov / (va * vb).sqrt())
}

/// Writes one table as `node_id,z0,...,z{d-1}`.
pub fn write_embeddings_csv<W: Write>(nodes: &[usize], table: &Tensor, out: W) -> Result<()> {
    if table.rows() != nodes.len() {
        return Err(Error::invalid(format!(
            "{} node ids for a table of {} rows",
            nodes.len(),
            table.rows()
        )));
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["node_id".to_string()];
    header.extend((0..table.cols()).map(|j| format!("z{j}")));
    w.write_record(&header).map_err(csv_err)?;
    for (r, &v) in nodes.iter().enumerate() {
        let mut row = vec![v.to_string()];
        row.extend(table.row(r).iter().map(|x| format!("{x}")));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
