//! The four commands and the artifacts they write.

use std::collections::HashSet;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use adagnn::boosting::{evaluate_state, load_checkpoint, save_checkpoint, train_adagnn, ExperimentData};
use adagnn::eval::{
    default_theta_grid, error_curves, export_embeddings, write_embeddings_csv, write_error_curves_csv,
    write_margin_csv, MetricsReport,
};
use adagnn::graphdata::gen_synthetic_multimodal;
use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;

use crate::config::{ExperimentConfig, SweepAxis};
use crate::dataset::{load_graph, write_synthetic};
use crate::manifest::write_manifest;

const THETA_POINTS: usize = 101;

fn prepare_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("output directory {} is not writable", dir.display()))?;
    let probe = dir.join(".write-check");
    std::fs::write(&probe, b"").with_context(|| format!("output directory {} is not writable", dir.display()))?;
    std::fs::remove_file(probe)?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("writing {}", path.display()))?))
}

/// Writes the effective config next to the outputs, minus the output
/// location itself.
fn write_config(dir: &Path, cfg: &ExperimentConfig) -> Result<(String, PathBuf)> {
    let mut cfg = cfg.clone();
    cfg.output_dir = None;
    let text = cfg.to_toml()?;
    let path = dir.join("config.toml");
    std::fs::write(&path, &text)?;
    Ok((text, path))
}

fn write_margins(dir: &Path, report: &MetricsReport) -> Result<PathBuf> {
    let path = dir.join("margins.csv");
    let mut curves = Vec::new();
    if !report.train_margins.is_empty() {
        curves.push(("train".to_string(), &report.train_margins[..]));
    }
    if !report.test_margins.is_empty() {
        curves.push(("test".to_string(), &report.test_margins[..]));
    }
    write_margin_csv(&curves, &default_theta_grid(THETA_POINTS), create(&path)?)?;
    Ok(path)
}

pub fn synth(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let block = cfg
        .dataset
        .synthetic
        .as_ref()
        .ok_or_else(|| anyhow!("synth needs a [dataset.synthetic] block in the config"))?;
    prepare_dir(out)?;
    let synth_cfg = block.to_synth_config(cfg.seed);
    let generated = gen_synthetic_multimodal(&synth_cfg)?;
    let mut outputs = write_synthetic(&generated, synth_cfg.num_modes, out)?;
    let (text, config_path) = write_config(out, cfg)?;
    outputs.push(config_path);
    write_manifest(out, "synth", synth_cfg.seed, &text, &[], &outputs)?;
    println!(
        "synth: {} nodes, {} edges -> {}",
        generated.graph.num_nodes(),
        generated.graph.num_edges(),
        out.display()
    );
    Ok(())
}

/// Trains one configuration and writes every artifact into `out`.
pub fn train(cfg: &ExperimentConfig, out: &Path) -> Result<MetricsReport> {
    cfg.validate()?;
    prepare_dir(out)?;
    let graph = load_graph(cfg)?;
    let data = ExperimentData::prepare(&graph, &cfg.split_spec(), cfg.task, cfg.seed)?;
    let encoder = cfg.encoder.to_encoder_config(data.features.cols());
    let (state, report) = train_adagnn(&graph, &data, &encoder, &cfg.boosting, &cfg.training, cfg.seed)?;

    let (text, config_path) = write_config(out, cfg)?;
    let mut outputs = vec![config_path];
    let metrics = out.join("metrics.json");
    report.write_json(&metrics)?;
    outputs.push(metrics);
    outputs.push(write_margins(out, &report)?);
    let curves = out.join("error_curves.csv");
    write_error_curves_csv(&error_curves(&report)?, create(&curves)?)?;
    outputs.push(curves);

    let nodes: Vec<usize> = (0..graph.num_nodes()).collect();
    let export = export_embeddings(&state, &data.features, &data.test_adjacency, &nodes, None, data.eval_seed)?;
    for (k, table) in export.tables.iter().enumerate() {
        let path = out.join(format!("embeddings_k{}.csv", k + 1));
        write_embeddings_csv(&nodes, table, create(&path)?)?;
        outputs.push(path);
    }
    let checkpoint = out.join("checkpoint.json");
    save_checkpoint(&state, &checkpoint)?;
    outputs.push(checkpoint);
    write_manifest(out, "train", cfg.seed, &text, &cfg.input_files(), &outputs)?;
    Ok(report)
}

/// Headline AP of a report: link AP when present, else recommendation AP.
fn headline_ap(report: &MetricsReport) -> Result<f64> {
    let r = report.final_round().ok_or_else(|| anyhow!("report has no rounds"))?;
    r.test_ap.or(r.rec_test_ap).ok_or_else(|| anyhow!("report has no test AP"))
}

pub fn print_summary(report: &MetricsReport) -> Result<()> {
    let r = report.final_round().ok_or_else(|| anyhow!("report has no rounds"))?;
    println!(
        "{}: rounds {} test_ap {:.4} train_error {:.4} test_error {:.4} stop {}",
        report.label,
        report.rounds.len(),
        headline_ap(report)?,
        r.train_error,
        r.test_error,
        report.stop_reason.as_deref().unwrap_or("budget")
    );
    Ok(())
}

/// Rescores a checkpoint on the dataset and split of `cfg`.
pub fn eval(cfg: &ExperimentConfig, checkpoint: &Path, out: &Path) -> Result<MetricsReport> {
    let state = load_checkpoint(checkpoint).with_context(|| format!("loading {}", checkpoint.display()))?;
    prepare_dir(out)?;
    let graph = load_graph(cfg)?;
    let data = ExperimentData::prepare(&graph, &cfg.split_spec(), state.task, cfg.seed)?;
    let report = evaluate_state(&state, &data)?;

    let (text, config_path) = write_config(out, cfg)?;
    let metrics = out.join("metrics.json");
    report.write_json(&metrics)?;
    let outputs = vec![config_path, metrics, write_margins(out, &report)?];
    let mut inputs = cfg.input_files();
    inputs.push(checkpoint.to_path_buf());
    write_manifest(out, "eval", cfg.seed, &text, &inputs, &outputs)?;
    Ok(report)
}

#[derive(Serialize)]
struct SweepRow {
    axis: SweepAxis,
    value: f64,
    seed: u64,
    baseline_embed_dim: usize,
    adagnn_learners: usize,
    adagnn_embed_dim: usize,
    adagnn_rounds: usize,
    baseline_test_ap: f64,
    adagnn_test_ap: f64,
}

#[derive(Serialize)]
struct SweepSummary {
    axis: SweepAxis,
    value: f64,
    seeds: usize,
    baseline_mean_ap: f64,
    adagnn_mean_ap: f64,
    adagnn_minus_baseline: f64,
}

fn with_axis(cfg: &ExperimentConfig, axis: SweepAxis, value: f64) -> Result<ExperimentConfig> {
    let mut c = cfg.clone();
    let count = |v: f64| -> Result<usize> {
        if v >= 1.0 && v.fract() == 0.0 {
            Ok(v as usize)
        } else {
            Err(anyhow!("sweep value {v} must be a positive integer for {axis:?}"))
        }
    };
    match axis {
        SweepAxis::NumLearners => c.boosting.max_learners = count(value)?,
        SweepAxis::EmbedDim => c.encoder.embed_dim = count(value)?,
        SweepAxis::TrainFraction => c.split.train_fraction = value,
    }
    Ok(c)
}

/// One AdaGNN arm and one single-learner arm per (value, seed). Both arms
/// of a pair share the seed, hence the graph, split and negatives.
pub fn sweep(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let spec = cfg.sweep.as_ref().ok_or_else(|| anyhow!("sweep needs a [sweep] block in the config"))?;
    cfg.validate()?;
    let seeds = if spec.seeds.is_empty() { vec![cfg.seed] } else { spec.seeds.clone() };
    let value_dir = |v: f64| format!("{}_{v}", spec.axis.name());
    let mut dirs = HashSet::new();
    for &v in &spec.values {
        for &s in &seeds {
            if !dirs.insert((value_dir(v), s)) {
                bail!("sweep arms overlap: value {v} with seed {s} maps to an existing output directory");
            }
        }
    }
    prepare_dir(out)?;

    let mut rows = Vec::new();
    for &value in &spec.values {
        let arm_cfg = with_axis(cfg, spec.axis, value)?;
        let baseline_dim = match spec.axis {
            SweepAxis::EmbedDim => arm_cfg.boosting.max_learners * arm_cfg.encoder.embed_dim,
            _ => spec
                .baseline_embed_dim
                .unwrap_or(arm_cfg.boosting.max_learners * arm_cfg.encoder.embed_dim),
        };
        for &seed in &seeds {
            let dir = out.join(value_dir(value)).join(format!("seed_{seed}"));
            let mut ada = arm_cfg.clone();
            ada.seed = seed;
            ada.sweep = None;
            let mut base = ada.clone();
            base.boosting.max_learners = 1;
            base.encoder.embed_dim = baseline_dim;
            let ada_report = train(&ada, &dir.join("adagnn"))?;
            let base_report = train(&base, &dir.join("baseline"))?;
            rows.push(SweepRow {
                axis: spec.axis,
                value,
                seed,
                baseline_embed_dim: baseline_dim,
                adagnn_learners: ada.boosting.max_learners,
                adagnn_embed_dim: ada.encoder.embed_dim,
                adagnn_rounds: ada_report.rounds.len(),
                baseline_test_ap: headline_ap(&base_report)?,
                adagnn_test_ap: headline_ap(&ada_report)?,
            });
            println!(
                "{:?} {value} seed {seed}: baseline {:.4} adagnn {:.4}",
                spec.axis,
                rows.last().expect("pushed").baseline_test_ap,
                rows.last().expect("pushed").adagnn_test_ap
            );
        }
    }

    let runs = out.join("sweep.csv");
    let mut w = csv::Writer::from_writer(create(&runs)?);
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    let summary = out.join("sweep_summary.csv");
    let mut w = csv::Writer::from_writer(create(&summary)?);
    for &value in &spec.values {
        let group: Vec<&SweepRow> = rows.iter().filter(|r| r.value == value).collect();
        let mean = |f: fn(&SweepRow) -> f64| group.iter().map(|r| f(r)).sum::<f64>() / group.len() as f64;
        let (b, a) = (mean(|r| r.baseline_test_ap), mean(|r| r.adagnn_test_ap));
        w.serialize(SweepSummary {
            axis: spec.axis,
            value,
            seeds: group.len(),
            baseline_mean_ap: b,
            adagnn_mean_ap: a,
            adagnn_minus_baseline: a - b,
        })?;
    }
    w.flush()?;
    let (text, config_path) = write_config(out, cfg)?;
    write_manifest(out, "sweep", cfg.seed, &text, &cfg.input_files(), &[config_path, runs, summary])?;
    Ok(())
}
