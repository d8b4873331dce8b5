//! Experiment configuration: TOML file, `--override` patches, grid checks.

use std::path::{Path, PathBuf};

use adagnn::boosting::BoostConfig;
use adagnn::gnn::{EncoderConfig, EncoderKind, Task, TrainHyper, BATCH_SIZE};
use adagnn::graphdata::{SplitMode, SplitSpec, SynthConfig};
use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

pub const LEARNING_RATES: [f64; 3] = [1e-4, 5e-4, 1e-3];
pub const BOOST_LEARNING_RATES: [f64; 3] = [1.0, 2.0, 3.0];
pub const NUM_HEADS: [usize; 3] = [1, 2, 3];
pub const NEIGHBOR_SAMPLES: [usize; 3] = [10, 20, 30];
pub const LEARNERS: std::ops::RangeInclusive<usize> = 5..=10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_task")]
    pub task: Task,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Accept hyper-parameters outside the tuning grids.
    #[serde(default)]
    pub allow_off_grid: bool,
    pub dataset: DatasetBlock,
    #[serde(default)]
    pub split: SplitBlock,
    pub encoder: EncoderBlock,
    #[serde(default)]
    pub boosting: BoostConfig,
    #[serde(default)]
    pub training: TrainHyper,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepBlock>,
}

fn default_task() -> Task {
    Task::Link
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<PathBuf>,
    /// The edge file carries a third timestamp column.
    #[serde(default)]
    pub timestamps: bool,
    #[serde(default)]
    pub allow_zero_features: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SynthBlock>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthBlock {
    pub num_nodes: usize,
    pub num_modes: usize,
    #[serde(default = "default_feature_dim")]
    pub feature_dim_per_mode: usize,
    pub modes_per_node: usize,
    pub intra_mode_edge_prob: f64,
    #[serde(default)]
    pub noise_edge_prob: f64,
    #[serde(default = "default_feature_noise")]
    pub feature_noise: f64,
    #[serde(default = "default_inactive_noise")]
    pub inactive_noise: f64,
    /// Generator seed; the experiment seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn default_feature_dim() -> usize {
    8
}

fn default_feature_noise() -> f64 {
    0.3
}

fn default_inactive_noise() -> f64 {
    0.01
}

impl SynthBlock {
    pub fn to_synth_config(&self, experiment_seed: u64) -> SynthConfig {
        SynthConfig {
            num_nodes: self.num_nodes,
            num_modes: self.num_modes,
            feature_dim_per_mode: self.feature_dim_per_mode,
            modes_per_node: self.modes_per_node,
            intra_mode_edge_prob: self.intra_mode_edge_prob,
            noise_edge_prob: self.noise_edge_prob,
            seed: self.seed.unwrap_or(experiment_seed),
            feature_noise: self.feature_noise,
            inactive_noise: self.inactive_noise,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitBlock {
    #[serde(default = "default_split_mode")]
    pub mode: SplitMode,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default)]
    pub dedup_pairs: bool,
}

fn default_split_mode() -> SplitMode {
    SplitMode::RandomTransductive
}

fn default_train_fraction() -> f64 {
    0.7
}

impl Default for SplitBlock {
    fn default() -> Self {
        Self {
            mode: default_split_mode(),
            train_fraction: default_train_fraction(),
            dedup_pairs: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncoderBlock {
    #[serde(default = "default_kind")]
    pub kind: EncoderKind,
    pub embed_dim: usize,
    #[serde(default = "one")]
    pub num_heads: usize,
    #[serde(default = "one")]
    pub num_layers: usize,
    #[serde(default = "ten")]
    pub neighbor_sample_size: usize,
    #[serde(default)]
    pub include_self_in_node_task: bool,
}

fn default_kind() -> EncoderKind {
    EncoderKind::Attention
}

fn one() -> usize {
    1
}

fn ten() -> usize {
    10
}

impl EncoderBlock {
    pub fn to_encoder_config(&self, input_dim: usize) -> EncoderConfig {
        EncoderConfig {
            kind: self.kind,
            input_dim,
            embed_dim: self.embed_dim,
            num_heads: self.num_heads,
            num_layers: self.num_layers,
            neighbor_sample_size: self.neighbor_sample_size,
            include_self_in_node_task: self.include_self_in_node_task,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    NumLearners,
    EmbedDim,
    TrainFraction,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::NumLearners => "num_learners",
            SweepAxis::EmbedDim => "embed_dim",
            SweepAxis::TrainFraction => "train_fraction",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    /// Paired seeds shared by both arms; the experiment seed when empty.
    #[serde(default)]
    pub seeds: Vec<u64>,
    /// Baseline embedding size; `max_learners * embed_dim` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_embed_dim: Option<usize>,
}

impl ExperimentConfig {
    /// Reads `path`, applies `KEY=VALUE` overrides (dotted keys, TOML
    /// values; bare words are taken as strings) and resolves dataset paths
    /// against the config file's directory.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut table: toml::Table =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let mut cfg: ExperimentConfig = toml::Value::Table(table)
            .try_into()
            .with_context(|| format!("invalid config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.dataset.edges, &mut cfg.dataset.features, &mut cfg.dataset.labels]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Dataset files the experiment reads.
    pub fn input_files(&self) -> Vec<PathBuf> {
        let d = &self.dataset;
        [&d.edges, &d.features, &d.labels].into_iter().flatten().cloned().collect()
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            mode: self.split.mode,
            train_fraction: self.split.train_fraction,
            seed: self.seed,
            dedup_pairs: self.split.dedup_pairs,
        }
    }

    /// Structural checks plus the tuning grids (unless `allow_off_grid`).
    pub fn validate(&self) -> Result<()> {
        let d = &self.dataset;
        match (&d.edges, &d.synthetic) {
            (Some(_), Some(_)) => bail!("dataset: give either `edges` or a [dataset.synthetic] block, not both"),
            (None, None) => bail!("dataset: missing `edges` path and [dataset.synthetic] block"),
            (Some(_), None) if d.features.is_none() => bail!("dataset: `features` path is required with `edges`"),
            _ => {}
        }
        for p in [&d.edges, &d.features, &d.labels].into_iter().flatten() {
            if !p.exists() {
                bail!("dataset: {} does not exist", p.display());
            }
        }
        if d.synthetic.is_some() && (d.features.is_some() || d.labels.is_some()) {
            bail!("dataset: `features`/`labels` paths cannot accompany a synthetic block");
        }
        if self.training.batch_size != BATCH_SIZE {
            bail!("training.batch_size is fixed at {BATCH_SIZE}, got {}", self.training.batch_size);
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                bail!("sweep.values is empty");
            }
        }
        if !self.allow_off_grid {
            self.check_grid()?;
        }
        Ok(())
    }

    fn check_grid(&self) -> Result<()> {
        let off = |name: &str, value: String, grid: String| {
            anyhow!("{name} = {value} is outside the tuning grid {grid}; set allow_off_grid = true to permit it")
        };
        let lr = self.training.learning_rate;
        if !LEARNING_RATES.contains(&lr) {
            return Err(off("training.learning_rate", lr.to_string(), format!("{LEARNING_RATES:?}")));
        }
        let blr = self.boosting.boost_learning_rate;
        if !BOOST_LEARNING_RATES.contains(&blr) {
            return Err(off("boosting.boost_learning_rate", blr.to_string(), format!("{BOOST_LEARNING_RATES:?}")));
        }
        let h = self.encoder.num_heads;
        if !NUM_HEADS.contains(&h) {
            return Err(off("encoder.num_heads", h.to_string(), format!("{NUM_HEADS:?}")));
        }
        let s = self.encoder.neighbor_sample_size;
        if !NEIGHBOR_SAMPLES.contains(&s) {
            return Err(off("encoder.neighbor_sample_size", s.to_string(), format!("{NEIGHBOR_SAMPLES:?}")));
        }
        let k = self.boosting.max_learners;
        if k != 1 && !LEARNERS.contains(&k) {
            return Err(off("boosting.max_learners", k.to_string(), "1 (baseline) or 5..=10".into()));
        }
        Ok(())
    }
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| anyhow!("override {spec:?} is not KEY=VALUE"))?;
    let (key, raw) = (key.trim(), raw.trim());
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        bail!("override key {key:?} is malformed");
    }
    let mut node = table;
    for part in &parts[..parts.len() - 1] {
        node = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| anyhow!("override {key:?}: {part:?} is not a table"))?;
    }
    node.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, text: &str) -> PathBuf {
        let p = dir.join("c.toml");
        std::fs::write(&p, text).unwrap();
        p
    }

    const MINIMAL: &str = "[dataset.synthetic]\nnum_nodes = 30\nnum_modes = 3\nmodes_per_node = 1\nintra_mode_edge_prob = 0.1\n\n[encoder]\nembed_dim = 8\n";

    #[test]
    fn defaults_fill_in() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::load(&write(dir.path(), MINIMAL), &[]).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.task, Task::Link);
        assert_eq!(cfg.boosting.max_learners, 5);
        assert_eq!(cfg.training.batch_size, 200);
        assert_eq!(cfg.split.train_fraction, 0.7);
        let round: ExperimentConfig = toml::from_str(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(round, cfg);
    }

    #[test]
    fn overrides_patch_nested_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(dir.path(), MINIMAL);
        let o = |s: &str| s.to_string();
        let cfg = ExperimentConfig::load(
            &path,
            &[o("boosting.max_learners=7"), o("split.mode=inductive"), o("training.learning_rate = 5e-4")],
        )
        .unwrap();
        assert_eq!(cfg.boosting.max_learners, 7);
        assert_eq!(cfg.split.mode, SplitMode::Inductive);
        assert_eq!(cfg.training.learning_rate, 5e-4);
        assert!(ExperimentConfig::load(&path, &[o("novalue")]).is_err());
        assert!(ExperimentConfig::load(&path, &[o("encoder.embed_dim.x=1")]).is_err());
        assert!(ExperimentConfig::load(&path, &[o("unknown_key=1")]).is_err());
    }

    #[test]
    fn grid_enforced_unless_allowed() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(dir.path(), MINIMAL);
        let o = |s: &str| vec![s.to_string()];
        for bad in ["training.learning_rate=0.01", "boosting.max_learners=3", "boosting.boost_learning_rate=1.5"] {
            let cfg = ExperimentConfig::load(&path, &o(bad)).unwrap();
            let msg = cfg.validate().unwrap_err().to_string();
            assert!(msg.contains("grid"), "{msg}");
            let mut cfg = cfg;
            cfg.allow_off_grid = true;
            cfg.validate().unwrap();
        }
        let k1 = ExperimentConfig::load(&path, &o("boosting.max_learners=1")).unwrap();
        k1.validate().unwrap();
    }

    #[test]
    fn dataset_block_checked() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::load(&write(dir.path(), "[dataset]\n[encoder]\nembed_dim = 8\n"), &[]).unwrap();
        assert!(cfg.validate().unwrap_err().to_string().contains("dataset.synthetic"));
        let text = "[dataset]\nedges = \"missing.csv\"\nfeatures = \"f.csv\"\n[encoder]\nembed_dim = 8\n";
        let cfg = ExperimentConfig::load(&write(dir.path(), text), &[]).unwrap();
        assert_eq!(cfg.dataset.edges.as_deref(), Some(dir.path().join("missing.csv").as_path()));
        assert!(cfg.validate().unwrap_err().to_string().contains("does not exist"));
    }
}
