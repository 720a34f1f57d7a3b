//! Dense and sparse vector arithmetic shared by every other module.
//!
//! All reals are f64 and every accumulation runs in plain left-to-right
//! order so that a run with a fixed seed is bit-reproducible. NaN or
//! infinity anywhere is treated as a broken numeric contract and surfaced
//! as an error instead of propagating silently.

use crate::error::{Error, Result};

/// A dense optimization iterate (or gradient, step, curvature vector).
///
/// Entries are always finite; constructors and arithmetic enforce it.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    values: Vec<f64>,
}

impl ParameterVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "ParameterVector::new",
            });
        }
        Ok(ParameterVector { values })
    }

    pub fn zeros(n: usize) -> Self {
        ParameterVector {
            values: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.values.iter()
    }

    pub fn norm_squared(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// `self += alpha * other`, in place.
    pub fn add_scaled(&mut self, alpha: f64, other: &ParameterVector) -> Result<()> {
        check_same_len(self.len(), other.len())?;
        for (a, b) in self.values.iter_mut().zip(other.values.iter()) {
            *a += alpha * b;
        }
        self.check_finite("ParameterVector::add_scaled")
    }

    /// `self *= c`, in place.
    pub fn scale(&mut self, c: f64) -> Result<()> {
        for a in self.values.iter_mut() {
            *a *= c;
        }
        self.check_finite("ParameterVector::scale")
    }

    fn check_finite(&self, context: &'static str) -> Result<()> {
        if self.values.iter().any(|v| !v.is_finite()) {
            Err(Error::NonFinite { context })
        } else {
            Ok(())
        }
    }
}

impl std::ops::Index<usize> for ParameterVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

fn check_same_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Dimension { expected, actual })
    }
}

/// Inner product, accumulated left to right.
pub fn dot(a: &ParameterVector, b: &ParameterVector) -> Result<f64> {
    check_same_len(a.len(), b.len())?;
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        acc += x * y;
    }
    if acc.is_finite() {
        Ok(acc)
    } else {
        Err(Error::NonFinite { context: "dot" })
    }
}

/// Returns `alpha * a + b` without touching the inputs.
pub fn axpy(alpha: f64, a: &ParameterVector, b: &ParameterVector) -> Result<ParameterVector> {
    check_same_len(a.len(), b.len())?;
    let values: Vec<f64> = a
        .iter()
        .zip(b.iter())
        .map(|(x, y)| alpha * x + y)
        .collect();
    ParameterVector::new(values).map_err(|_| Error::NonFinite { context: "axpy" })
}

/// Returns `a - b`.
pub fn sub(a: &ParameterVector, b: &ParameterVector) -> Result<ParameterVector> {
    axpy(-1.0, b, a)
}

/// A sparse feature vector with strictly increasing 0-based indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    indices: Vec<usize>,
    values: Vec<f64>,
    dim: usize,
}

impl SparseVector {
    pub fn new(indices: Vec<usize>, values: Vec<f64>, dim: usize) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::Dimension {
                expected: indices.len(),
                actual: values.len(),
            });
        }
        if indices.len() > dim {
            return Err(Error::Argument(format!(
                "{} stored entries exceed dimension {dim}",
                indices.len()
            )));
        }
        for window in indices.windows(2) {
            if window[0] >= window[1] {
                return Err(Error::Argument(format!(
                    "sparse indices not strictly increasing at {}..{}",
                    window[0], window[1]
                )));
            }
        }
        if let Some(&last) = indices.last() {
            if last >= dim {
                return Err(Error::Argument(format!(
                    "sparse index {last} out of range for dimension {dim}"
                )));
            }
        }
        if values.iter().any(|v| !v.is_finite() || *v == 0.0) {
            return Err(Error::NonFinite {
                context: "SparseVector::new",
            });
        }
        Ok(SparseVector {
            indices,
            values,
            dim,
        })
    }

    pub fn empty(dim: usize) -> Self {
        SparseVector {
            indices: Vec::new(),
            values: Vec::new(),
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn densify(&self) -> ParameterVector {
        let mut out = ParameterVector::zeros(self.dim);
        for (i, v) in self.entries() {
            out.values[i] = v;
        }
        out
    }

    pub fn norm_squared(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// Inner product of a sparse vector with a dense one over the stored support.
pub fn sparse_dot(u: &SparseVector, x: &ParameterVector) -> Result<f64> {
    check_same_len(u.dim(), x.len())?;
    let mut acc = 0.0;
    for (i, v) in u.entries() {
        acc += v * x[i];
    }
    if acc.is_finite() {
        Ok(acc)
    } else {
        Err(Error::NonFinite {
            context: "sparse_dot",
        })
    }
}
