//! Reverse-mode differentiation over a flat tape.
//!
//! Every operation appends a node whose parents have strictly smaller
//! indices, so the tape order is already a topological order and the
//! backward pass is a single reverse sweep.

use alloc::vec;
use alloc::vec::Vec;

use super::ops::{dot, matvec, sigmoid_scalar, softmax_slice};
use super::{NumericsError, Tensor};

/// Handle to a node on a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    MatVec { w: Var, x: Var },
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Offset(Var),
    Tanh(Var),
    Sigmoid(Var),
    Exp(Var),
    Ln(Var),
    Softmax(Var),
    LogSoftmax(Var),
    Concat(Vec<Var>),
    Slice { src: Var, start: usize },
    Dot(Var, Var),
    Sum(Var),
    WeightedSum { weights: Var, values: Vec<Var> },
    Clamp { src: Var, lo: f64, hi: f64 },
}

#[derive(Clone, Debug)]
struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

/// A single-use computation graph. Build it, call [`Graph::backward`], drop it.
#[derive(Clone, Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

/// Gradients produced by [`Graph::backward`], indexed by [`Var`].
#[derive(Clone, Debug)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&[f64]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Adds a leaf. It receives a gradient iff `t.requires_grad()`.
    pub fn leaf(&mut self, t: Tensor) -> Var {
        let needs_grad = t.requires_grad();
        self.push(t, Op::Leaf, needs_grad)
    }

    /// Adds a differentiable leaf regardless of the tensor's flag.
    pub fn param(&mut self, t: &Tensor) -> Var {
        self.push(t.clone().with_grad(true), Op::Leaf, true)
    }

    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(t.with_grad(false), Op::Leaf, false)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn data(&self, v: Var) -> &[f64] {
        self.nodes[v.0].value.data()
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value.data()[0]
    }

    fn push(&mut self, value: Tensor, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].needs_grad)
    }

    fn same_len(&self, op: &'static str, a: Var, b: Var) -> Result<(), NumericsError> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.len() != tb.len() {
            return Err(NumericsError::ShapeMismatch {
                op,
                left: ta.shape().to_vec(),
                right: tb.shape().to_vec(),
            });
        }
        Ok(())
    }

    fn unary(&mut self, a: Var, op: Op, f: impl Fn(f64) -> f64) -> Var {
        let src = self.value(a);
        let data = src.data().iter().map(|&x| f(x)).collect();
        let value = Tensor::new(src.shape().to_vec(), data).expect("shape preserved");
        let needs = self.needs(&[a]);
        self.push(value, op, needs)
    }

    fn binary(
        &mut self,
        name: &'static str,
        a: Var,
        b: Var,
        op: Op,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Var, NumericsError> {
        self.same_len(name, a, b)?;
        let (ta, tb) = (self.value(a), self.value(b));
        let data = ta
            .data()
            .iter()
            .zip(tb.data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        let value = Tensor::new(ta.shape().to_vec(), data).expect("shape preserved");
        let needs = self.needs(&[a, b]);
        Ok(self.push(value, op, needs))
    }

    /// `W x` with `W: [d_out, d_in]`.
    pub fn linear(&mut self, w: Var, x: Var) -> Result<Var, NumericsError> {
        let (tw, tx) = (self.value(w), self.value(x));
        if tw.rank() != 2 || tw.cols() != tx.len() {
            return Err(NumericsError::ShapeMismatch {
                op: "linear",
                left: tw.shape().to_vec(),
                right: tx.shape().to_vec(),
            });
        }
        let out = matvec(tw.data(), tw.rows(), tw.cols(), tx.data());
        let needs = self.needs(&[w, x]);
        Ok(self.push(Tensor::vector(out), Op::MatVec { w, x }, needs))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, NumericsError> {
        self.binary("add", a, b, Op::Add(a, b), |x, y| x + y)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, NumericsError> {
        self.binary("sub", a, b, Op::Sub(a, b), |x, y| x - y)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, NumericsError> {
        self.binary("mul", a, b, Op::Mul(a, b), |x, y| x * y)
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Var {
        self.unary(a, Op::Scale(a, k), |x| k * x)
    }

    /// Adds the constant `k` elementwise.
    pub fn offset(&mut self, a: Var, k: f64) -> Var {
        self.unary(a, Op::Offset(a), |x| x + k)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, Op::Tanh(a), libm::tanh)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, Op::Sigmoid(a), sigmoid_scalar)
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.unary(a, Op::Exp(a), libm::exp)
    }

    pub fn ln(&mut self, a: Var) -> Var {
        self.unary(a, Op::Ln(a), libm::log)
    }

    pub fn clamp(&mut self, a: Var, lo: f64, hi: f64) -> Var {
        self.unary(a, Op::Clamp { src: a, lo, hi }, |x| x.clamp(lo, hi))
    }

    pub fn softmax(&mut self, a: Var) -> Result<Var, NumericsError> {
        let src = self.value(a);
        if src.is_empty() {
            return Err(NumericsError::Empty("softmax"));
        }
        if !src.is_finite() {
            return Err(NumericsError::NonFinite("softmax"));
        }
        let out = softmax_slice(src.data());
        let needs = self.needs(&[a]);
        Ok(self.push(Tensor::vector(out), Op::Softmax(a), needs))
    }

    pub fn log_softmax(&mut self, a: Var) -> Result<Var, NumericsError> {
        let src = self.value(a);
        if src.is_empty() {
            return Err(NumericsError::Empty("log_softmax"));
        }
        if !src.is_finite() {
            return Err(NumericsError::NonFinite("log_softmax"));
        }
        let max = src.data().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + libm::log(src.data().iter().map(|&s| libm::exp(s - max)).sum::<f64>());
        let out = src.data().iter().map(|&s| s - lse).collect();
        let needs = self.needs(&[a]);
        Ok(self.push(Tensor::vector(out), Op::LogSoftmax(a), needs))
    }

    pub fn concat(&mut self, parts: &[Var]) -> Result<Var, NumericsError> {
        if parts.is_empty() {
            return Err(NumericsError::Empty("concat"));
        }
        let mut data = Vec::new();
        for &p in parts {
            let t = self.value(p);
            if t.rank() != 1 {
                return Err(NumericsError::ShapeMismatch {
                    op: "concat",
                    left: vec![1],
                    right: t.shape().to_vec(),
                });
            }
            data.extend_from_slice(t.data());
        }
        let needs = self.needs(parts);
        Ok(self.push(Tensor::vector(data), Op::Concat(parts.to_vec()), needs))
    }

    pub fn slice(&mut self, src: Var, start: usize, len: usize) -> Result<Var, NumericsError> {
        let t = self.value(src);
        if start + len > t.len() {
            return Err(NumericsError::ShapeMismatch {
                op: "slice",
                left: t.shape().to_vec(),
                right: vec![start, len],
            });
        }
        let data = t.data()[start..start + len].to_vec();
        let needs = self.needs(&[src]);
        Ok(self.push(Tensor::vector(data), Op::Slice { src, start }, needs))
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var, NumericsError> {
        self.same_len("dot", a, b)?;
        let v = dot(self.data(a), self.data(b));
        let needs = self.needs(&[a, b]);
        Ok(self.push(Tensor::scalar(v), Op::Dot(a, b), needs))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let v = self.data(a).iter().sum();
        let needs = self.needs(&[a]);
        self.push(Tensor::scalar(v), Op::Sum(a), needs)
    }

    /// Stacks scalars (or short vectors) and sums them.
    pub fn sum_all(&mut self, parts: &[Var]) -> Result<Var, NumericsError> {
        let c = self.concat(parts)?;
        Ok(self.sum(c))
    }

    /// `Σ_i weights[i] · values[i]`.
    pub fn weighted_sum(&mut self, weights: Var, values: &[Var]) -> Result<Var, NumericsError> {
        let w = self.value(weights);
        if w.len() != values.len() || values.is_empty() {
            return Err(NumericsError::ShapeMismatch {
                op: "weighted_sum",
                left: w.shape().to_vec(),
                right: vec![values.len()],
            });
        }
        let width = self.value(values[0]).len();
        let mut out = vec![0.0; width];
        for (i, &v) in values.iter().enumerate() {
            let t = self.value(v);
            if t.len() != width {
                return Err(NumericsError::ShapeMismatch {
                    op: "weighted_sum",
                    left: vec![width],
                    right: t.shape().to_vec(),
                });
            }
            let wi = self.data(weights)[i];
            for (o, x) in out.iter_mut().zip(t.data()) {
                *o += wi * x;
            }
        }
        let needs = self.needs(&[weights]) || self.needs(values);
        Ok(self.push(
            Tensor::vector(out),
            Op::WeightedSum {
                weights,
                values: values.to_vec(),
            },
            needs,
        ))
    }

    /// Backpropagates from the scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients, NumericsError> {
        if self.value(loss).len() != 1 {
            return Err(NumericsError::ShapeMismatch {
                op: "backward",
                left: self.value(loss).shape().to_vec(),
                right: vec![1],
            });
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![1.0]);
        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            if node.needs_grad {
                self.propagate(idx, &g, &mut grads);
            }
            grads[idx] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn accumulate(&self, grads: &mut [Option<Vec<f64>>], v: Var, f: impl Fn(usize) -> f64) {
        if !self.nodes[v.0].needs_grad {
            return;
        }
        let n = self.nodes[v.0].value.len();
        let slot = grads[v.0].get_or_insert_with(|| vec![0.0; n]);
        for (i, s) in slot.iter_mut().enumerate() {
            *s += f(i);
        }
    }

    fn propagate(&self, idx: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let out = self.nodes[idx].value.data();
        match &self.nodes[idx].op {
            Op::Leaf => {}
            Op::MatVec { w, x } => {
                let cols = self.value(*w).cols();
                let xd = self.data(*x);
                let wd = self.data(*w);
                self.accumulate(grads, *w, |i| g[i / cols] * xd[i % cols]);
                self.accumulate(grads, *x, |j| {
                    g.iter()
                        .enumerate()
                        .map(|(r, gr)| gr * wd[r * cols + j])
                        .sum()
                });
            }
            Op::Add(a, b) => {
                self.accumulate(grads, *a, |i| g[i]);
                self.accumulate(grads, *b, |i| g[i]);
            }
            Op::Sub(a, b) => {
                self.accumulate(grads, *a, |i| g[i]);
                self.accumulate(grads, *b, |i| -g[i]);
            }
            Op::Mul(a, b) => {
                let (ad, bd) = (self.data(*a), self.data(*b));
                self.accumulate(grads, *a, |i| g[i] * bd[i]);
                self.accumulate(grads, *b, |i| g[i] * ad[i]);
            }
            Op::Scale(a, k) => self.accumulate(grads, *a, |i| k * g[i]),
            Op::Offset(a) => self.accumulate(grads, *a, |i| g[i]),
            Op::Tanh(a) => self.accumulate(grads, *a, |i| g[i] * (1.0 - out[i] * out[i])),
            Op::Sigmoid(a) => self.accumulate(grads, *a, |i| g[i] * out[i] * (1.0 - out[i])),
            Op::Exp(a) => self.accumulate(grads, *a, |i| g[i] * out[i]),
            Op::Ln(a) => {
                let ad = self.data(*a);
                self.accumulate(grads, *a, |i| g[i] / ad[i]);
            }
            Op::Clamp { src, lo, hi } => {
                let sd = self.data(*src);
                self.accumulate(grads, *src, |i| {
                    if sd[i] >= *lo && sd[i] <= *hi {
                        g[i]
                    } else {
                        0.0
                    }
                });
            }
            Op::Softmax(a) => {
                let gs = dot(g, out);
                self.accumulate(grads, *a, |i| out[i] * (g[i] - gs));
            }
            Op::LogSoftmax(a) => {
                let total: f64 = g.iter().sum();
                self.accumulate(grads, *a, |i| g[i] - libm::exp(out[i]) * total);
            }
            Op::Concat(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let n = self.value(p).len();
                    self.accumulate(grads, p, |i| g[offset + i]);
                    offset += n;
                }
            }
            Op::Slice { src, start } => {
                let (start, len) = (*start, out.len());
                self.accumulate(grads, *src, |i| {
                    if i >= start && i < start + len {
                        g[i - start]
                    } else {
                        0.0
                    }
                });
            }
            Op::Dot(a, b) => {
                let (ad, bd) = (self.data(*a), self.data(*b));
                self.accumulate(grads, *a, |i| g[0] * bd[i]);
                self.accumulate(grads, *b, |i| g[0] * ad[i]);
            }
            Op::Sum(a) => self.accumulate(grads, *a, |_| g[0]),
            Op::WeightedSum { weights, values } => {
                self.accumulate(grads, *weights, |i| dot(g, self.data(values[i])));
                let wd = self.data(*weights);
                for (i, &v) in values.iter().enumerate() {
                    self.accumulate(grads, v, |j| wd[i] * g[j]);
                }
            }
        }
    }
}
