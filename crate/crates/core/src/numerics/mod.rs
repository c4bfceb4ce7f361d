//! Dense f64 tensors, a reverse-mode tape, and finite-difference checks.

mod gradcheck;
mod graph;
pub mod ops;
mod tensor;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub use gradcheck::{grad_check, GradReport};
pub use graph::{Gradients, Graph, Var};
pub use tensor::Tensor;

#[derive(Clone, Debug, PartialEq)]
pub enum NumericsError {
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    Empty(&'static str),
    NonFinite(&'static str),
    /// A named parameter is unknown to the loss under check.
    UnknownParam(String),
}

impl fmt::Display for NumericsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ShapeMismatch { op, left, right } => {
                write!(f, "{op}: shape mismatch between {left:?} and {right:?}")
            }
            Self::Empty(op) => write!(f, "{op}: empty input"),
            Self::NonFinite(op) => write!(f, "{op}: non-finite value"),
            Self::UnknownParam(name) => write!(f, "unknown parameter `{name}`"),
        }
    }
}

impl core::error::Error for NumericsError {}
