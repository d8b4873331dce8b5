//! JSON checkpoints. Tensor values are stored as base64 of little-endian
//! f64 bytes so they load back bit for bit.

use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::{BoostConfig, BoostState, SharedDecoder, StopReason};
use crate::gnn::{EncoderConfig, Task, WeakLearnerParams};
use crate::numcore::Tensor;
use crate::{Error, Result};

const FORMAT: &str = "adagnn-checkpoint";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct TensorBlob {
    shape: Vec<usize>,
    data: String,
}

fn encode_f64(values: &[f64]) -> String {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    STANDARD.encode(bytes)
}

fn decode_f64(data: &str) -> Result<Vec<f64>> {
    let bytes = STANDARD
        .decode(data)
        .map_err(|e| Error::Checkpoint(format!("bad base64: {e}")))?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Checkpoint(format!(
            "blob of {} bytes is not a whole number of f64",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

impl TensorBlob {
    fn from_tensor(t: &Tensor) -> Self {
        Self {
            shape: t.shape().to_vec(),
            data: encode_f64(t.values()),
        }
    }

    fn to_tensor(&self) -> Result<Tensor> {
        Tensor::new(self.shape.clone(), decode_f64(&self.data)?)
            .map_err(|e| Error::Checkpoint(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct LearnerBlob {
    alpha: f64,
    num_classes: Option<usize>,
    tensors: Vec<TensorBlob>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct DecoderBlob {
    input_dim: usize,
    num_classes: Option<usize>,
    tensors: Vec<TensorBlob>,
}

impl DecoderBlob {
    fn from_decoder(d: &SharedDecoder) -> Self {
        Self {
            input_dim: d.input_dim,
            num_classes: d.num_classes,
            tensors: d.tensors.iter().map(TensorBlob::from_tensor).collect(),
        }
    }

    fn to_decoder(&self) -> Result<SharedDecoder> {
        let tensors = self
            .tensors
            .iter()
            .map(TensorBlob::to_tensor)
            .collect::<Result<Vec<_>>>()?;
        let reference = SharedDecoder::init(self.input_dim, self.num_classes, 0);
        if tensors.len() != 4
            || tensors
                .iter()
                .zip(&reference.tensors)
                .any(|(a, b)| a.shape() != b.shape())
        {
            return Err(Error::Checkpoint(
                "shared decoder tensors do not match its dimensions".into(),
            ));
        }
        Ok(SharedDecoder {
            input_dim: self.input_dim,
            num_classes: self.num_classes,
            tensors,
        })
    }
}

/// Serialized form of a [`BoostState`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    format: String,
    version: u32,
    task: Task,
    encoder: EncoderConfig,
    boosting: BoostConfig,
    weights: String,
    node_weights: String,
    round_errors: Vec<f64>,
    stopped: Option<StopReason>,
    learners: Vec<LearnerBlob>,
    edge_decoder: Option<DecoderBlob>,
    node_decoder: Option<DecoderBlob>,
}

impl Checkpoint {
    pub fn from_state(state: &BoostState) -> Self {
        Self {
            format: FORMAT.into(),
            version: VERSION,
            task: state.task,
            encoder: state.encoder.clone(),
            boosting: state.config.clone(),
            weights: encode_f64(&state.weights),
            node_weights: encode_f64(&state.node_weights),
            round_errors: state.round_errors.clone(),
            stopped: state.stopped,
            learners: state
                .learners
                .iter()
                .map(|l| LearnerBlob {
                    alpha: l.alpha,
                    num_classes: l.num_classes,
                    tensors: l.tensors.iter().map(TensorBlob::from_tensor).collect(),
                })
                .collect(),
            edge_decoder: state.edge_decoder.as_ref().map(DecoderBlob::from_decoder),
            node_decoder: state.node_decoder.as_ref().map(DecoderBlob::from_decoder),
        }
    }

    pub fn into_state(self) -> Result<BoostState> {
        if self.format != FORMAT || self.version != VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint format {} version {}",
                self.format, self.version
            )));
        }
        self.encoder.validate()?;
        let learners = self
            .learners
            .iter()
            .map(|b| {
                let p = WeakLearnerParams {
                    config: self.encoder.clone(),
                    num_classes: b.num_classes,
                    tensors: b
                        .tensors
                        .iter()
                        .map(TensorBlob::to_tensor)
                        .collect::<Result<Vec<_>>>()?,
                    alpha: b.alpha,
                };
                p.check_shapes()?;
                if !p.is_finite() {
                    return Err(Error::Checkpoint("non-finite learner parameters".into()));
                }
                Ok(p)
            })
            .collect::<Result<Vec<_>>>()?;
        if learners.is_empty() {
            return Err(Error::Checkpoint("checkpoint holds no learners".into()));
        }
        Ok(BoostState {
            task: self.task,
            encoder: self.encoder,
            config: self.boosting,
            weights: decode_f64(&self.weights)?,
            node_weights: decode_f64(&self.node_weights)?,
            round_errors: self.round_errors,
            stopped: self.stopped,
            learners,
            edge_decoder: self
                .edge_decoder
                .as_ref()
                .map(DecoderBlob::to_decoder)
                .transpose()?,
            node_decoder: self
                .node_decoder
                .as_ref()
                .map(DecoderBlob::to_decoder)
                .transpose()?,
        })
    }
}

pub fn save_checkpoint(state: &BoostState, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(&Checkpoint::from_state(state))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<BoostState> {
    let text = std::fs::read_to_string(path)?;
    let cp: Checkpoint = serde_json::from_str(&text)
        .map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
    cp.into_state()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blob_round_trip_is_exact() {
        let values = vec![0.1, -3.5e-300, f64::MAX, 1.0 / 3.0, -0.0];
        let back = decode_f64(&encode_f64(&values)).unwrap();
        assert_eq!(
            values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            back.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        assert!(decode_f64("AAA").is_err());
        assert!(decode_f64("AAAA").is_err());
    }
}
