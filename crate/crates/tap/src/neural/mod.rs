//! Minimal dense numerical stack: row-major f64 matrices, MLPs with exact
//! reverse-mode gradients, optimizers, and a finite-difference gradient
//! checker. Everything is deterministic given inputs and seeds.

mod check;
mod mlp;
mod optim;

pub use check::grad_check;
pub use mlp::{Activation, DenseLayer, MlpCache, MlpParams};
pub use optim::{OptimizerKind, OptimizerState};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NeuralError {
    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    Shape {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("non-finite value in {context}")]
    NonFinite { context: String },
}

/// Dense row-major matrix of 64-bit floats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor2 {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Tensor2 {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, NeuralError> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for row in &rows {
            if row.len() != n_cols {
                return Err(NeuralError::Shape {
                    context: "Tensor2::from_rows",
                    expected: n_cols,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: n_rows,
            cols: n_cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>, NeuralError> {
        if x.len() != self.cols {
            return Err(NeuralError::Shape {
                context: "matvec",
                expected: self.cols,
                got: x.len(),
            });
        }
        let mut y = vec![0.0; self.rows];
        for (r, out) in y.iter_mut().enumerate() {
            let row = self.row(r);
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            *out = acc;
        }
        Ok(y)
    }

    /// x = Aᵀ y
    pub fn matvec_transpose(&self, y: &[f64]) -> Result<Vec<f64>, NeuralError> {
        if y.len() != self.rows {
            return Err(NeuralError::Shape {
                context: "matvec_transpose",
                expected: self.rows,
                got: y.len(),
            });
        }
        let mut x = vec![0.0; self.cols];
        for (r, &w) in y.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let row = self.row(r);
            for (out, a) in x.iter_mut().zip(row) {
                *out += w * a;
            }
        }
        Ok(x)
    }

    /// A += y xᵀ (outer-product accumulation for weight gradients).
    pub fn add_outer(&mut self, y: &[f64], x: &[f64]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(x.len(), self.cols);
        for (r, &w) in y.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let row = self.row_mut(r);
            for (out, a) in row.iter_mut().zip(x) {
                *out += w * a;
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Numerically stable softmax with temperature: p_k = exp(v_k/τ) / Σ exp(v_j/τ),
/// computed with max subtraction. Requires τ > 0 and finite inputs.
pub fn softmax_with_temperature(values: &[f64], tau: f64) -> Result<Vec<f64>, NeuralError> {
    if !(tau > 0.0) {
        return Err(NeuralError::Domain(format!(
            "temperature must be positive, got {tau}"
        )));
    }
    if values.is_empty() {
        return Err(NeuralError::Domain("softmax over empty vector".to_owned()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(NeuralError::NonFinite {
            context: "softmax input".to_owned(),
        });
    }
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = values.iter().map(|v| ((v - max) / tau).exp()).collect();
    let sum: f64 = out.iter().sum();
    for p in &mut out {
        *p /= sum;
    }
    Ok(out)
}

pub(crate) fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}
