use rand::Rng;

use super::Tensor;

/// Glorot/Xavier uniform: entries in `(-a, a)` with `a = sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Tensor {
    let a = (6.0 / (rows + cols).max(1) as f64).sqrt();
    let values = (0..rows * cols).map(|_| rng.gen_range(-a..a)).collect();
    Tensor::matrix(rows, cols, values).expect("shape matches")
}

pub fn zeros_like_shape(t: &Tensor) -> Tensor {
    Tensor::zeros(t.rows(), t.cols())
}
