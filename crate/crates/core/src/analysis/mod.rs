//! Canonical correlation analysis and projection-weighted CCA between two
//! sample-aligned representation matrices.

mod linalg;

use alloc::vec::Vec;
use core::fmt;

use crate::numerics::Tensor;
use linalg::{dot, jacobi_svd, orthonormal_basis};

/// Directions whose QR pivot is below this fraction of the largest are dropped.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub enum AnalysisError {
    TooFewSamples { n: usize, d: usize },
    SampleMismatch { x: usize, y: usize },
    Shape { len: usize, n: usize, d: usize },
    NonFinite,
    Degenerate,
}

impl fmt::Display for AnalysisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::TooFewSamples { n, d } => write!(
                f,
                "{n} samples for {d} dimensions; need more samples than dimensions \
                 (subsample dimensions or project first)"
            ),
            Self::SampleMismatch { x, y } => write!(f, "sample counts differ: {x} vs {y}"),
            Self::Shape { len, n, d } => write!(f, "{len} values cannot form a {n}x{d} matrix"),
            Self::NonFinite => write!(f, "representation contains non-finite values"),
            Self::Degenerate => write!(f, "representation has rank zero after centering"),
        }
    }
}

impl core::error::Error for AnalysisError {}

/// `n` samples of `d`-dimensional representations, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct RepMatrix {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl RepMatrix {
    pub fn new(n: usize, d: usize, data: Vec<f64>) -> Result<Self, AnalysisError> {
        if data.len() != n * d || d == 0 {
            return Err(AnalysisError::Shape {
                len: data.len(),
                n,
                d,
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(AnalysisError::NonFinite);
        }
        Ok(Self { n, d, data })
    }

    pub fn from_tensor(t: &Tensor) -> Result<Self, AnalysisError> {
        if t.rank() != 2 {
            return Err(AnalysisError::Shape {
                len: t.len(),
                n: t.len(),
                d: 1,
            });
        }
        Self::new(t.rows(), t.cols(), t.data().to_vec())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    fn centered_columns(&self) -> Vec<Vec<f64>> {
        (0..self.d)
            .map(|j| {
                let col: Vec<f64> = (0..self.n).map(|i| self.data[i * self.d + j]).collect();
                let mean = col.iter().sum::<f64>() / self.n as f64;
                col.into_iter().map(|v| v - mean).collect()
            })
            .collect()
    }
}

/// Canonical correlations plus the matching directions in X's sample space.
struct CcaParts {
    rho: Vec<f64>,
    x_directions: Vec<Vec<f64>>,
    x_columns: Vec<Vec<f64>>,
}

fn cca_parts(x: &RepMatrix, y: &RepMatrix) -> Result<CcaParts, AnalysisError> {
    if x.n != y.n {
        return Err(AnalysisError::SampleMismatch { x: x.n, y: y.n });
    }
    let d = x.d.max(y.d);
    if x.n <= d {
        return Err(AnalysisError::TooFewSamples { n: x.n, d });
    }
    let x_columns = x.centered_columns();
    let qx = orthonormal_basis(&x_columns, RANK_TOLERANCE);
    let qy = orthonormal_basis(&y.centered_columns(), RANK_TOLERANCE);
    if qx.is_empty() || qy.is_empty() {
        return Err(AnalysisError::Degenerate);
    }
    // Columns of (Qxᵀ Qy)ᵀ; the right rotation of its SVD gives the left
    // singular vectors of Qxᵀ Qy, i.e. X's canonical directions.
    let cross_t: Vec<Vec<f64>> = qx
        .iter()
        .map(|a| qy.iter().map(|b| dot(a, b)).collect())
        .collect();
    let m = qx.len().min(qy.len());
    let (sigma, u) = jacobi_svd(cross_t);
    let rho = sigma.iter().take(m).map(|s| s.clamp(0.0, 1.0)).collect();
    let x_directions = u
        .iter()
        .take(m)
        .map(|coeffs| {
            let mut h = alloc::vec![0.0; x.n];
            for (c, q) in coeffs.iter().zip(&qx) {
                for (hi, qi) in h.iter_mut().zip(q) {
                    *hi += c * qi;
                }
            }
            h
        })
        .collect();
    Ok(CcaParts {
        rho,
        x_directions,
        x_columns,
    })
}

/// Canonical correlations in decreasing order; `min(rank X, rank Y)` of them.
pub fn cca(x: &RepMatrix, y: &RepMatrix) -> Result<Vec<f64>, AnalysisError> {
    Ok(cca_parts(x, y)?.rho)
}

/// Projection-weighted mean of the canonical correlations, weighting each by
/// how much of X's centred columns its direction accounts for.
pub fn pwcca(x: &RepMatrix, y: &RepMatrix) -> Result<f64, AnalysisError> {
    let parts = cca_parts(x, y)?;
    let alpha: Vec<f64> = parts
        .x_directions
        .iter()
        .map(|h| parts.x_columns.iter().map(|c| dot(h, c).abs()).sum())
        .collect();
    let total: f64 = alpha.iter().sum();
    if total == 0.0 {
        return Err(AnalysisError::Degenerate);
    }
    Ok(alpha
        .iter()
        .zip(&parts.rho)
        .map(|(a, r)| a * r)
        .sum::<f64>()
        / total)
}

/// `(layer index, pwcca)` sorted by descending score, ties by index.
pub fn layer_ranking(
    layers: &[RepMatrix],
    reference: &RepMatrix,
) -> Result<Vec<(usize, f64)>, AnalysisError> {
    let mut scored = layers
        .iter()
        .enumerate()
        .map(|(i, l)| pwcca(l, reference).map(|s| (i, s)))
        .collect::<Result<Vec<_>, _>>()?;
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(scored)
}
