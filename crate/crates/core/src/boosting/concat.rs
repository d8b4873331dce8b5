//! Concatenated-embedding variant: the K frozen encoders feed one shared
//! one-hidden-layer decoder.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::eval::{average_precision, recommendation_ap};
use crate::gnn::{embed_nodes, BATCH_SIZE};
use crate::gnn::{embed_pairs, link_loss, node_loss, TrainHyper, WeakLearnerParams};
use crate::graphdata::{Adjacency, EdgeExample};
use crate::numcore::{adam_step, glorot_uniform, AdamConfig, AdamState, Tape, Tensor, Var};
use crate::{Error, Result};

/// `sigmoid` (pairwise) or `softmax` (node) over
/// `leaky_relu(x W1 + b1) W2 + b2`.
#[derive(Clone, Debug, PartialEq)]
pub struct SharedDecoder {
    pub input_dim: usize,
    pub num_classes: Option<usize>,
    /// `[w1, b1, w2, b2]`.
    pub tensors: Vec<Tensor>,
}

/// Training targets for the shared decoder.
#[derive(Clone, Copy, Debug)]
pub enum DecoderTarget<'a> {
    Edges(&'a [u8]),
    Nodes(&'a [Vec<f64>]),
}

impl DecoderTarget<'_> {
    fn len(&self) -> usize {
        match self {
            DecoderTarget::Edges(y) => y.len(),
            DecoderTarget::Nodes(y) => y.len(),
        }
    }
}

impl SharedDecoder {
    pub fn init(input_dim: usize, num_classes: Option<usize>, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let out = num_classes.unwrap_or(1);
        Self {
            input_dim,
            num_classes,
            tensors: vec![
                glorot_uniform(input_dim, input_dim, &mut rng),
                Tensor::zeros(1, input_dim),
                glorot_uniform(input_dim, out, &mut rng),
                Tensor::zeros(1, out),
            ],
        }
    }

    fn forward(&self, tape: &mut Tape, vars: &[Var], x: Var) -> Result<Var> {
        let h = tape.matmul(x, vars[0])?;
        let h = tape.add(h, vars[1])?;
        let h = tape.leaky_relu(h)?;
        let o = tape.matmul(h, vars[2])?;
        let o = tape.add(o, vars[3])?;
        Ok(match self.num_classes {
            None => tape.sigmoid(o)?,
            Some(_) => tape.softmax_rows(o)?,
        })
    }

    fn check_input(&self, x: &Tensor) -> Result<()> {
        if x.cols() != self.input_dim {
            return Err(Error::invalid(format!(
                "shared decoder expects {} input columns, got {}",
                self.input_dim,
                x.cols()
            )));
        }
        Ok(())
    }

    /// Raw decoder output, one row per input row.
    pub fn predict(&self, x: &Tensor) -> Result<Vec<Vec<f64>>> {
        self.check_input(x)?;
        let width = self.num_classes.unwrap_or(1);
        let mut out = Vec::with_capacity(x.rows());
        for start in (0..x.rows()).step_by(BATCH_SIZE) {
            let end = (start + BATCH_SIZE).min(x.rows());
            let mut tape = Tape::new();
            let vars: Vec<Var> = self.tensors.iter().map(|t| tape.constant(t)).collect();
            let xv = tape.constant_matrix(
                end - start,
                self.input_dim,
                x.values()[start * x.cols()..end * x.cols()].to_vec(),
            )?;
            let y = self.forward(&mut tape, &vars, xv)?;
            out.extend(tape.value(y).chunks(width).map(<[f64]>::to_vec));
        }
        Ok(out)
    }
}

/// Row-wise `concat_k(z_src^k * z_dst^k)`.
pub fn pair_inputs(src: &[Tensor], dst: &[Tensor]) -> Result<Tensor> {
    if src.is_empty() || src.len() != dst.len() {
        return Err(Error::invalid(
            "pair_inputs: need matching non-empty embedding lists",
        ));
    }
    let rows = src[0].rows();
    let width: usize = src.iter().map(Tensor::cols).sum();
    let mut out = Vec::with_capacity(rows * width);
    for r in 0..rows {
        for (a, b) in src.iter().zip(dst) {
            if a.rows() != rows || b.rows() != rows || a.cols() != b.cols() {
                return Err(Error::invalid(
                    "pair_inputs: embedding tables disagree in shape",
                ));
            }
            out.extend(a.row(r).iter().zip(b.row(r)).map(|(x, y)| x * y));
        }
    }
    Ok(Tensor::matrix(rows, width, out)?)
}

/// Row-wise concatenation of per-learner node embeddings.
pub fn node_inputs(embeddings: &[Tensor]) -> Result<Tensor> {
    if embeddings.is_empty() {
        return Err(Error::invalid("node_inputs: no embeddings"));
    }
    let rows = embeddings[0].rows();
    let width: usize = embeddings.iter().map(Tensor::cols).sum();
    let mut out = Vec::with_capacity(rows * width);
    for r in 0..rows {
        for e in embeddings {
            if e.rows() != rows {
                return Err(Error::invalid("node_inputs: row counts differ"));
            }
            out.extend_from_slice(e.row(r));
        }
    }
    Ok(Tensor::matrix(rows, width, out)?)
}

fn target_ap(decoder: &SharedDecoder, x: &Tensor, target: DecoderTarget) -> Result<f64> {
    let pred = decoder.predict(x)?;
    match target {
        DecoderTarget::Edges(y) => {
            average_precision(&pred.iter().map(|r| r[0]).collect::<Vec<_>>(), y)
        }
        DecoderTarget::Nodes(y) => recommendation_ap(&pred, y),
    }
}

/// Trains the shared decoder with uniform example weights, Adam on
/// mini-batches, and early stopping on validation AP.
pub fn fit_shared_decoder(
    inputs: &Tensor,
    target: DecoderTarget,
    val: Option<(&Tensor, DecoderTarget)>,
    hyper: &TrainHyper,
    seed: u64,
) -> Result<SharedDecoder> {
    hyper.validate()?;
    let n = inputs.rows();
    if n == 0 || target.len() != n {
        return Err(Error::invalid(
            "shared decoder: inputs and targets must be non-empty and aligned",
        ));
    }
    let num_classes = match target {
        DecoderTarget::Edges(_) => None,
        DecoderTarget::Nodes(y) => Some(y[0].len()),
    };
    let mut dec = SharedDecoder::init(inputs.cols(), num_classes, seed);
    let mut adam = AdamState::new(
        &dec.tensors,
        AdamConfig::with_learning_rate(hyper.learning_rate),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut order: Vec<usize> = (0..n).collect();
    let d = inputs.cols();
    let mut best: Option<(f64, Vec<Tensor>)> = None;
    let mut since_best = 0;
    for _ in 0..hyper.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(hyper.batch_size) {
            let m = batch.len();
            let mut tape = Tape::new();
            let vars: Vec<Var> = dec.tensors.iter().map(|t| tape.param(t)).collect();
            let rows: Vec<f64> = batch
                .iter()
                .flat_map(|&i| inputs.row(i).iter().copied())
                .collect();
            let x = tape.constant_matrix(m, d, rows)?;
            let y = dec.forward(&mut tape, &vars, x)?;
            let w = vec![1.0 / m as f64; m];
            let loss = match target {
                DecoderTarget::Edges(labels) => {
                    let l: Vec<u8> = batch.iter().map(|&i| labels[i]).collect();
                    link_loss(&mut tape, y, &l, &w)?
                }
                DecoderTarget::Nodes(labels) => {
                    let l: Vec<&[f64]> = batch.iter().map(|&i| labels[i].as_slice()).collect();
                    node_loss(&mut tape, y, &l, &w)?
                }
            };
            let grads = tape.backward(loss)?;
            grads.write_into(&mut dec.tensors, &vars)?;
            adam_step(&mut dec.tensors, &mut adam)?;
        }
        if let Some((vx, vt)) = val {
            let ap = target_ap(&dec, vx, vt)?;
            if best.as_ref().map_or(true, |(b, _)| ap > *b) {
                best = Some((ap, dec.tensors.clone()));
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= hyper.patience {
                    break;
                }
            }
        }
    }
    if let Some((_, t)) = best {
        dec.tensors = t;
    }
    for t in &mut dec.tensors {
        t.clear_grad();
    }
    Ok(dec)
}

/// Pairwise scores of the concatenated-embedding model.
pub fn concat_nn_predict(
    learners: &[WeakLearnerParams],
    decoder: &SharedDecoder,
    features: &Tensor,
    adj: &Adjacency,
    pairs: &[EdgeExample],
    eval_seed: u64,
) -> Result<Vec<f64>> {
    let width: usize = learners.iter().map(|l| l.config.embed_dim).sum();
    if width != decoder.input_dim || decoder.num_classes.is_some() {
        return Err(Error::invalid(format!(
            "shared decoder takes {} inputs, learners provide {width}",
            decoder.input_dim
        )));
    }
    let (src, dst): (Vec<Tensor>, Vec<Tensor>) = learners
        .iter()
        .map(|l| embed_pairs(l, features, adj, pairs, eval_seed))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    Ok(decoder
        .predict(&pair_inputs(&src, &dst)?)?
        .into_iter()
        .map(|r| r[0])
        .collect())
}

/// Node distributions of the concatenated-embedding model.
pub fn concat_nn_predict_nodes(
    learners: &[WeakLearnerParams],
    decoder: &SharedDecoder,
    features: &Tensor,
    adj: &Adjacency,
    nodes: &[usize],
    eval_seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let width: usize = learners.iter().map(|l| l.config.embed_dim).sum();
    if width != decoder.input_dim || decoder.num_classes.is_none() {
        return Err(Error::invalid(format!(
            "shared decoder takes {} inputs, learners provide {width}",
            decoder.input_dim
        )));
    }
    let embs = learners
        .iter()
        .map(|l| {
            embed_nodes(
                l,
                features,
                adj,
                nodes,
                l.config.include_self_in_node_task,
                eval_seed,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    decoder.predict(&node_inputs(&embs)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concatenated_width_is_sum_of_learner_widths() {
        let a = Tensor::zeros(3, 4);
        let b = Tensor::zeros(3, 6);
        let x = pair_inputs(&[a.clone(), b.clone()], &[a.clone(), b.clone()]).unwrap();
        assert_eq!(x.shape(), &[3, 10]);
        assert_eq!(node_inputs(&[a, b]).unwrap().shape(), &[3, 10]);
    }

    #[test]
    fn decoder_rejects_wrong_width() {
        let dec = SharedDecoder::init(4, None, 0);
        assert!(dec.predict(&Tensor::zeros(2, 5)).is_err());
        let out = dec.predict(&Tensor::zeros(2, 4)).unwrap();
        assert_eq!(out, vec![vec![0.5], vec![0.5]]);
    }

    #[test]
    fn decoder_learns_separable_products() {
        let x = Tensor::from_rows(&[
            vec![1.0, 1.0],
            vec![-1.0, -1.0],
            vec![0.9, 1.1],
            vec![-1.2, -0.8],
        ])
        .unwrap();
        let y = [1u8, 0, 1, 0];
        let hyper = TrainHyper {
            learning_rate: 1e-3,
            epochs: 400,
            ..TrainHyper::default()
        };
        let dec = fit_shared_decoder(&x, DecoderTarget::Edges(&y), None, &hyper, 1).unwrap();
        let p = dec.predict(&x).unwrap();
        assert!(p[0][0] > 0.5 && p[1][0] < 0.5 && p[2][0] > 0.5 && p[3][0] < 0.5);
    }
}
