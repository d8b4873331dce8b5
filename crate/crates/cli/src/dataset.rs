//! Graph loading from a config and the synthetic dataset writer.

use std::path::{Path, PathBuf};

use adagnn::graphdata::{
    gen_synthetic_multimodal, load_edge_csv, load_node_features, Graph, SyntheticGraph,
};
use adagnn::numcore::Tensor;
use anyhow::{anyhow, Context, Result};
use serde::Serialize;

use crate::config::ExperimentConfig;

/// Builds the experiment graph.
pub fn load_graph(cfg: &ExperimentConfig) -> Result<Graph> {
    let d = &cfg.dataset;
    if let Some(s) = &d.synthetic {
        return Ok(gen_synthetic_multimodal(&s.to_synth_config(cfg.seed))?.graph);
    }
    let edges = d.edges.as_ref().ok_or_else(|| anyhow!("dataset: missing `edges` path"))?;
    let features = d.features.as_ref().ok_or_else(|| anyhow!("dataset: missing `features` path"))?;
    let graph = load_edge_csv(edges, d.timestamps).with_context(|| format!("loading {}", edges.display()))?;
    let graph = load_node_features(features, graph, d.allow_zero_features)
        .with_context(|| format!("loading {}", features.display()))?;
    let graph = match &d.labels {
        Some(path) => {
            // Label rows share the feature-file layout.
            let labels = load_node_features(path, graph.clone(), true)
                .with_context(|| format!("loading {}", path.display()))?
                .node_features()
                .expect("just attached")
                .clone();
            graph.with_node_labels(labels)?
        }
        None => graph,
    };
    Ok(graph)
}

#[derive(Serialize)]
struct AnnotatedEdge {
    src: usize,
    dst: usize,
    /// `None` for noise edges.
    mode: Option<usize>,
}

#[derive(Serialize)]
struct GroundTruthFile<'a> {
    seed: u64,
    num_nodes: usize,
    num_modes: usize,
    node_modes: &'a [Vec<usize>],
    /// Nodes without edges; the edge list cannot name them, so the feature
    /// and label files omit them too.
    isolated_nodes: Vec<usize>,
    edges: Vec<AnnotatedEdge>,
}

pub const SYNTH_FILES: [&str; 4] = ["edges.csv", "features.csv", "labels.csv", "ground_truth.json"];

fn write_table(path: &Path, header: &str, t: &Tensor, rows: &[usize]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    let mut head = vec!["node_id".to_string()];
    head.extend((0..t.cols()).map(|j| format!("{header}{j}")));
    w.write_record(&head)?;
    for &r in rows {
        let mut row = vec![r.to_string()];
        row.extend(t.row(r).iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the edge list, features, labels and mode annotations of `s`.
pub fn write_synthetic(s: &SyntheticGraph, num_modes: usize, out: &Path) -> Result<Vec<PathBuf>> {
    let paths: Vec<PathBuf> = SYNTH_FILES.iter().map(|f| out.join(f)).collect();
    let mut w = csv::Writer::from_path(&paths[0]).with_context(|| format!("writing {}", paths[0].display()))?;
    w.write_record(["src", "dst"])?;
    for e in s.graph.edges() {
        w.write_record([e.src.to_string(), e.dst.to_string()])?;
    }
    w.flush()?;
    let adj = s.graph.adjacency();
    let (linked, isolated): (Vec<usize>, Vec<usize>) = (0..s.graph.num_nodes()).partition(|&v| adj.degree(v) > 0);
    write_table(&paths[1], "x", s.graph.node_features().expect("generated"), &linked)?;
    write_table(&paths[2], "y", s.graph.node_labels().expect("generated"), &linked)?;
    let truth = GroundTruthFile {
        seed: s.truth.seed,
        num_nodes: s.graph.num_nodes(),
        num_modes,
        node_modes: &s.truth.node_modes,
        isolated_nodes: isolated,
        edges: s
            .graph
            .edges()
            .iter()
            .zip(&s.truth.edge_modes)
            .map(|(e, &mode)| AnnotatedEdge { src: e.src, dst: e.dst, mode })
            .collect(),
    };
    let mut json = serde_json::to_string_pretty(&truth)?;
    json.push('\n');
    std::fs::write(&paths[3], json)?;
    Ok(paths)
}
