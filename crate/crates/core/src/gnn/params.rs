use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::numcore::{glorot_uniform, Tensor};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderKind {
    MeanPool,
    Attention,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub kind: EncoderKind,
    pub input_dim: usize,
    pub embed_dim: usize,
    #[serde(default = "one")]
    pub num_heads: usize,
    #[serde(default = "one")]
    pub num_layers: usize,
    #[serde(default = "ten")]
    pub neighbor_sample_size: usize,
    /// Whether node-task embeddings see the node's own features.
    #[serde(default)]
    pub include_self_in_node_task: bool,
}

fn one() -> usize {
    1
}

fn ten() -> usize {
    10
}

impl EncoderConfig {
    pub fn new(kind: EncoderKind, input_dim: usize, embed_dim: usize) -> Self {
        Self {
            kind,
            input_dim,
            embed_dim,
            num_heads: 1,
            num_layers: 1,
            neighbor_sample_size: 10,
            include_self_in_node_task: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_layers != 1 {
            return Err(Error::Config(format!(
                "num_layers must be 1, got {}",
                self.num_layers
            )));
        }
        if self.input_dim == 0 || self.embed_dim == 0 {
            return Err(Error::Config(
                "input_dim and embed_dim must be positive".into(),
            ));
        }
        if self.neighbor_sample_size == 0 {
            return Err(Error::Config(
                "neighbor_sample_size must be positive".into(),
            ));
        }
        match self.kind {
            EncoderKind::MeanPool if self.num_heads != 1 => {
                Err(Error::Config("mean_pool encoder uses a single head".into()))
            }
            EncoderKind::Attention
                if self.num_heads == 0 || self.embed_dim % self.num_heads != 0 =>
            {
                Err(Error::Config(format!(
                    "embed_dim {} not divisible by num_heads {}",
                    self.embed_dim, self.num_heads
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn head_dim(&self) -> usize {
        self.embed_dim / self.num_heads
    }
}

/// Where each named weight sits in [`WeakLearnerParams::tensors`].
#[derive(Clone, Debug, PartialEq)]
pub struct ParamLayout {
    pub w_self: usize,
    pub w_comb: usize,
    pub b_comb: usize,
    /// Per head: value transform and, for attention, left/right score vectors.
    pub heads: Vec<(usize, Option<(usize, usize)>)>,
    /// Node decoder: `(w1, b1, w2, b2)`.
    pub node_decoder: Option<(usize, usize, usize, usize)>,
}

impl ParamLayout {
    pub fn new(config: &EncoderConfig, has_node_decoder: bool) -> Self {
        let mut next = 3;
        let heads = (0..config.num_heads)
            .map(|_| {
                let w = next;
                next += 1;
                let attn = (config.kind == EncoderKind::Attention).then(|| {
                    next += 2;
                    (next - 2, next - 1)
                });
                (w, attn)
            })
            .collect();
        let node_decoder = has_node_decoder.then(|| (next, next + 1, next + 2, next + 3));
        Self {
            w_self: 0,
            w_comb: 1,
            b_comb: 2,
            heads,
            node_decoder,
        }
    }
}

/// Trained state of one weak learner.
#[derive(Clone, Debug, PartialEq)]
pub struct WeakLearnerParams {
    pub config: EncoderConfig,
    /// Output width of the node decoder, when present.
    pub num_classes: Option<usize>,
    pub tensors: Vec<Tensor>,
    /// Combination coefficient in the ensemble.
    pub alpha: f64,
}

impl WeakLearnerParams {
    /// Glorot-initialized weights, zero biases.
    pub fn init<R: Rng + ?Sized>(
        config: &EncoderConfig,
        num_classes: Option<usize>,
        rng: &mut R,
    ) -> Result<Self> {
        config.validate()?;
        let (dv, dz, dh) = (config.input_dim, config.embed_dim, config.head_dim());
        let mut tensors = vec![
            glorot_uniform(dv, dz, rng),
            glorot_uniform(2 * dz, dz, rng),
            Tensor::zeros(1, dz),
        ];
        for _ in 0..config.num_heads {
            tensors.push(glorot_uniform(dv, dh, rng));
            if config.kind == EncoderKind::Attention {
                tensors.push(glorot_uniform(dh, 1, rng));
                tensors.push(glorot_uniform(dh, 1, rng));
            }
        }
        if let Some(c) = num_classes {
            if c == 0 {
                return Err(Error::Config(
                    "node decoder needs at least one class".into(),
                ));
            }
            tensors.push(glorot_uniform(dz, dz, rng));
            tensors.push(Tensor::zeros(1, dz));
            tensors.push(glorot_uniform(dz, c, rng));
            tensors.push(Tensor::zeros(1, c));
        }
        Ok(Self {
            config: config.clone(),
            num_classes,
            tensors,
            alpha: 1.0,
        })
    }

    pub fn layout(&self) -> ParamLayout {
        ParamLayout::new(&self.config, self.num_classes.is_some())
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(Tensor::is_finite) && self.alpha.is_finite() && self.alpha >= 0.0
    }

    /// Checks tensor shapes against the layout implied by the config.
    pub fn check_shapes(&self) -> Result<()> {
        let mut rng = rand::rngs::mock::StepRng::new(0, 0);
        let reference = Self::init(&self.config, self.num_classes, &mut rng)?;
        if reference.tensors.len() != self.tensors.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} tensors, found {}",
                reference.tensors.len(),
                self.tensors.len()
            )));
        }
        for (i, (a, b)) in reference.tensors.iter().zip(&self.tensors).enumerate() {
            if a.shape() != b.shape() {
                return Err(Error::Checkpoint(format!(
                    "tensor {i}: expected shape {:?}, found {:?}",
                    a.shape(),
                    b.shape()
                )));
            }
        }
        Ok(())
    }
}
