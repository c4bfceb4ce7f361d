use alloc::vec;
use alloc::vec::Vec;

use super::TrainError;
use crate::numerics::Tensor;

/// Smallest standard deviation kept; constant dimensions are floored to it.
pub const STD_FLOOR: f64 = 1e-8;

/// Per-dimension mean and standard deviation over every row of a dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    /// Two-pass population statistics over the rows of `[n, d]` matrices.
    pub fn compute<'a>(
        matrices: impl IntoIterator<Item = &'a Tensor> + Clone,
    ) -> Result<Self, TrainError> {
        let mut dim = None;
        let mut count = 0usize;
        let mut sum: Vec<f64> = Vec::new();
        for m in matrices.clone() {
            let d = *dim.get_or_insert(m.cols());
            if m.rank() != 2 || m.cols() != d {
                return Err(TrainError::Data("matrices differ in width".into()));
            }
            if sum.is_empty() {
                sum = vec![0.0; d];
            }
            for r in 0..m.rows() {
                for (s, v) in sum.iter_mut().zip(m.row(r)) {
                    *s += v;
                }
            }
            count += m.rows();
        }
        if count == 0 {
            return Err(TrainError::Data(
                "cannot compute statistics of an empty dataset".into(),
            ));
        }
        let n = count as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
        let mut sq = vec![0.0; mean.len()];
        for m in matrices {
            for r in 0..m.rows() {
                for ((s, v), mu) in sq.iter_mut().zip(m.row(r)).zip(&mean) {
                    *s += (v - mu) * (v - mu);
                }
            }
        }
        let mut floored = 0;
        let std = sq
            .iter()
            .map(|s| {
                let sd = libm::sqrt(s / n);
                if sd < STD_FLOOR {
                    floored += 1;
                    STD_FLOOR
                } else {
                    sd
                }
            })
            .collect();
        if floored > 0 {
            log::warn!(
                "{floored} constant dimension(s); standard deviation floored at {STD_FLOOR:e}"
            );
        }
        Ok(Self { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn check(&self, m: &Tensor) -> Result<(), TrainError> {
        if m.rank() == 2 && m.cols() == self.dim() {
            Ok(())
        } else {
            Err(TrainError::Data(alloc::format!(
                "expected rows of width {}, got shape {:?}",
                self.dim(),
                m.shape()
            )))
        }
    }

    pub fn apply(&self, m: &Tensor) -> Result<Tensor, TrainError> {
        self.map(m, |v, mu, sd| (v - mu) / sd)
    }

    pub fn invert(&self, m: &Tensor) -> Result<Tensor, TrainError> {
        self.map(m, |v, mu, sd| v * sd + mu)
    }

    fn map(&self, m: &Tensor, f: impl Fn(f64, f64, f64) -> f64) -> Result<Tensor, TrainError> {
        self.check(m)?;
        let d = self.dim();
        let data = m
            .data()
            .iter()
            .enumerate()
            .map(|(i, &v)| f(v, self.mean[i % d], self.std[i % d]))
            .collect();
        Ok(Tensor::matrix(m.rows(), d, data)?)
    }
}
