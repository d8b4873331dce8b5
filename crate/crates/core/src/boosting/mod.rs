//! The boosting meta-learner: SAMME.R and AdaBoost.R2 weight updates, the
//! concatenated-embedding variant, learner combination and stopping.

mod checkpoint;
mod combine;
mod concat;
mod data;
mod stop;
mod train;
mod update;

use serde::{Deserialize, Serialize};

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use combine::{combine_distributions, combine_node, combine_pairwise, combine_scores};
pub use concat::{
    concat_nn_predict, concat_nn_predict_nodes, fit_shared_decoder, node_inputs, pair_inputs,
    DecoderTarget, SharedDecoder,
};
pub use data::{derive_seed, ExperimentData};
pub use stop::{should_stop, StopReason};
pub use train::{evaluate_state, train_adagnn};
pub use update::{
    adaboost_r2_round, cap_weights, coded_log_odds, init_weights, r2_update_from_losses,
    renormalize, samme_r_node_update, samme_r_update, weighted_bootstrap, R2Round, R2Status,
};

use crate::gnn::{EncoderConfig, Task, WeakLearnerParams};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    SammeR,
    AdaboostR2,
    ConcatNn,
}

/// Which scores drive the SAMME.R weight update.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateSource {
    /// The newest learner's own scores.
    PerLearner,
    /// The ensemble's scores after adding the newest learner.
    Combined,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostConfig {
    pub max_learners: usize,
    /// Scales the SAMME.R exponent; unused by AdaBoost.R2.
    pub boost_learning_rate: f64,
    pub algorithm: Algorithm,
    pub tau: f64,
    /// Largest weight any single example may hold after an update.
    #[serde(default = "default_cap")]
    pub weight_cap: f64,
    /// `None` picks per-learner for single tasks and combined for
    /// multi-task runs.
    #[serde(default)]
    pub update_source: Option<UpdateSource>,
    /// Stop when a round corrects none of the previous ensemble's errors.
    #[serde(default = "yes")]
    pub stop_on_no_progress: bool,
}

fn default_cap() -> f64 {
    0.5
}

fn yes() -> bool {
    true
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            max_learners: 5,
            boost_learning_rate: 1.0,
            algorithm: Algorithm::SammeR,
            tau: 0.5,
            weight_cap: 0.5,
            update_source: None,
            stop_on_no_progress: true,
        }
    }
}

impl BoostConfig {
    pub fn validate(&self, task: Task) -> Result<()> {
        if self.max_learners == 0 {
            return Err(Error::Config("max_learners must be at least 1".into()));
        }
        if !(self.boost_learning_rate > 0.0 && self.boost_learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "boost_learning_rate must be positive, got {}",
                self.boost_learning_rate
            )));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::Config(format!(
                "tau must lie in (0, 1), got {}",
                self.tau
            )));
        }
        if !(self.weight_cap > 0.0 && self.weight_cap <= 1.0) {
            return Err(Error::Config(format!(
                "weight_cap must lie in (0, 1], got {}",
                self.weight_cap
            )));
        }
        if self.algorithm == Algorithm::AdaboostR2 && task == Task::Multitask {
            return Err(Error::Config(
                "adaboost_r2 supports the link and recommend tasks only".into(),
            ));
        }
        Ok(())
    }
}

/// Boosting state after training.
#[derive(Clone, Debug, PartialEq)]
pub struct BoostState {
    pub task: Task,
    pub encoder: EncoderConfig,
    pub config: BoostConfig,
    /// Edge-pool weights after the last update (positives, then negatives).
    pub weights: Vec<f64>,
    /// Node weights after the last update.
    pub node_weights: Vec<f64>,
    pub learners: Vec<WeakLearnerParams>,
    /// Weighted training error of each retained learner.
    pub round_errors: Vec<f64>,
    pub stopped: Option<StopReason>,
    pub edge_decoder: Option<SharedDecoder>,
    pub node_decoder: Option<SharedDecoder>,
}
