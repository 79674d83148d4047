use super::FlowError;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Scalar training pairs `(x_i, y_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

/// Sample means used by the coefficient formulas.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Moments {
    pub n: usize,
    pub xbar: f64,
    pub ybar: f64,
    pub x2bar: f64,
    pub xybar: f64,
    pub x2ybar: f64,
    /// `|xbar| <= tol`; the certificate requires `sum x_i != 0`.
    pub xbar_zero: bool,
}

pub const XBAR_TOL: f64 = 1e-12;

impl Dataset {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self, FlowError> {
        if xs.len() != ys.len() {
            return Err(FlowError::LengthMismatch { xs: xs.len(), ys: ys.len() });
        }
        if xs.is_empty() {
            return Err(FlowError::EmptyDataset);
        }
        if let Some(row) = xs.iter().zip(&ys).position(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(FlowError::NonFiniteData { row });
        }
        Ok(Self { xs, ys })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }

    pub fn moments(&self) -> Moments {
        self.moments_with_tol(XBAR_TOL)
    }

    pub fn moments_with_tol(&self, tol: f64) -> Moments {
        let n = self.len();
        let mean = |f: &dyn Fn(f64, f64) -> f64| self.iter().map(|(x, y)| f(x, y)).sum::<f64>() / n as f64;
        let xbar = mean(&|x, _| x);
        Moments {
            n,
            xbar,
            ybar: mean(&|_, y| y),
            x2bar: mean(&|x, _| x * x),
            xybar: mean(&|x, y| x * y),
            x2ybar: mean(&|x, y| x * x * y),
            xbar_zero: xbar.abs() <= tol,
        }
    }

    /// SHA-256 over the row count and the little-endian bit patterns of every pair.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.len() as u64).to_le_bytes());
        for (x, y) in self.iter() {
            h.update(x.to_le_bytes());
            h.update(y.to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}
