//! Plain (non-recording) tensor operations.
//!
//! The graph in [`super::graph`] uses the same kernels for its forward pass,
//! so a value computed here and one computed on a tape agree bit for bit.

use alloc::vec;
use alloc::vec::Vec;

use super::{NumericsError, Tensor};

/// `y = W x` for `W: [d_out, d_in]` and `x: [d_in]`.
pub fn linear(x: &Tensor, w: &Tensor) -> Result<Tensor, NumericsError> {
    if w.rank() != 2 || x.rank() != 1 || w.cols() != x.len() {
        return Err(NumericsError::ShapeMismatch {
            op: "linear",
            left: w.shape().to_vec(),
            right: x.shape().to_vec(),
        });
    }
    Ok(Tensor::vector(matvec(
        w.data(),
        w.rows(),
        w.cols(),
        x.data(),
    )))
}

pub fn softmax(scores: &Tensor) -> Result<Tensor, NumericsError> {
    if scores.is_empty() {
        return Err(NumericsError::Empty("softmax"));
    }
    if scores.data().iter().any(|v| v.is_nan()) {
        return Err(NumericsError::NonFinite("softmax"));
    }
    if scores.data().iter().any(|v| v.is_infinite()) {
        return Err(NumericsError::NonFinite("softmax"));
    }
    Ok(Tensor::vector(softmax_slice(scores.data())))
}

pub fn sigmoid(x: &Tensor) -> Result<Tensor, NumericsError> {
    if x.data().iter().any(|v| v.is_nan()) {
        return Err(NumericsError::NonFinite("sigmoid"));
    }
    let data = x.data().iter().map(|&v| sigmoid_scalar(v)).collect();
    Tensor::new(x.shape().to_vec(), data)
}

pub fn concat(parts: &[&Tensor]) -> Result<Tensor, NumericsError> {
    if parts.is_empty() {
        return Err(NumericsError::Empty("concat"));
    }
    let mut data = Vec::with_capacity(parts.iter().map(|p| p.len()).sum());
    for p in parts {
        if p.rank() != 1 {
            return Err(NumericsError::ShapeMismatch {
                op: "concat",
                left: vec![1],
                right: p.shape().to_vec(),
            });
        }
        data.extend_from_slice(p.data());
    }
    Ok(Tensor::vector(data))
}

pub(crate) fn matvec(w: &[f64], rows: usize, cols: usize, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; rows];
    for (r, o) in out.iter_mut().enumerate() {
        *o = dot(&w[r * cols..(r + 1) * cols], x);
    }
    out
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn softmax_slice(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = scores.iter().map(|&s| libm::exp(s - max)).collect();
    let total: f64 = out.iter().sum();
    for v in &mut out {
        *v /= total;
    }
    out
}

/// Branches on sign so neither tail overflows.
pub fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}
