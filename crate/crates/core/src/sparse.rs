//! Sparse vectors and the bias-augmented linear weights built on them.

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::error::{Error, Result};

/// A sparse real vector with strictly increasing indices and no stored zeros.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    dim: usize,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseVector {
    /// Builds a vector from parallel index/value arrays. Indices must be strictly increasing and
    /// below `dim`; explicit zeros are dropped.
    pub fn new(dim: usize, indices: Vec<u32>, values: Vec<f64>) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::InvalidSparse(format!(
                "{} indices but {} values",
                indices.len(),
                values.len()
            )));
        }
        for w in indices.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidSparse(format!(
                    "indices not strictly increasing at {} -> {}",
                    w[0], w[1]
                )));
            }
        }
        if let Some(&last) = indices.last() {
            if last as usize >= dim {
                return Err(Error::InvalidSparse(format!(
                    "index {last} out of range for dimension {dim}"
                )));
            }
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("sparse value {v}")));
        }
        let mut out = SparseVector {
            dim,
            indices,
            values,
        };
        out.drop_zeros();
        Ok(out)
    }

    /// Builds a vector from unordered `(index, value)` pairs. Duplicate indices are rejected.
    pub fn from_pairs(dim: usize, pairs: impl IntoIterator<Item = (u32, f64)>) -> Result<Self> {
        let mut pairs: Vec<(u32, f64)> = pairs.into_iter().collect();
        pairs.sort_unstable_by_key(|p| p.0);
        let (indices, values) = pairs.into_iter().unzip();
        Self::new(dim, indices, values)
    }

    pub fn from_dense(values: &[f64]) -> Result<Self> {
        let pairs = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i as u32, *v));
        Self::from_pairs(values.len(), pairs)
    }

    pub fn zeros(dim: usize) -> Self {
        SparseVector {
            dim,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    fn drop_zeros(&mut self) {
        if self.values.iter().all(|v| *v != 0.0) {
            return;
        }
        let mut w = 0;
        for r in 0..self.values.len() {
            if self.values[r] != 0.0 {
                self.indices[w] = self.indices[r];
                self.values[w] = self.values[r];
                w += 1;
            }
        }
        self.indices.truncate(w);
        self.values.truncate(w);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_zero(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    /// Exact sparse inner product. Both vectors must share the declared dimension.
    pub fn dot(&self, other: &SparseVector) -> Result<f64> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: other.dim,
            });
        }
        Ok(self.dot_unchecked(other))
    }

    /// Merge-join inner product without the dimension check.
    #[inline]
    pub fn dot_unchecked(&self, other: &SparseVector) -> f64 {
        let (ai, av) = (&self.indices, &self.values);
        let (bi, bv) = (&other.indices, &other.values);
        let (mut i, mut j) = (0, 0);
        let mut acc = 0.0;
        while i < ai.len() && j < bi.len() {
            match ai[i].cmp(&bi[j]) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    acc += av[i] * bv[j];
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    pub fn dot_dense(&self, dense: &[f64]) -> Result<f64> {
        if self.dim != dense.len() {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: dense.len(),
            });
        }
        Ok(self.iter().map(|(i, v)| v * dense[i as usize]).sum())
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Returns the unit-norm rescaling of `self`; fails on the zero vector.
    pub fn l2_normalize(&self) -> Result<SparseVector> {
        let norm = self.norm();
        if norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        if !norm.is_finite() {
            return Err(Error::NonFinite(format!("norm {norm}")));
        }
        Ok(self.scaled(1.0 / norm))
    }

    pub fn scaled(&self, factor: f64) -> SparseVector {
        let mut out = SparseVector {
            dim: self.dim,
            indices: self.indices.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        };
        out.drop_zeros();
        out
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, v) in self.iter() {
            out[i as usize] = v;
        }
        out
    }

    /// Sum of many vectors of dimension `dim`, accumulated in a hash map so that the cost is
    /// proportional to the total number of stored entries rather than `dim`.
    pub fn sum<'a>(dim: usize, vectors: impl IntoIterator<Item = &'a SparseVector>) -> Result<Self> {
        let mut acc: HashMap<u32, f64> = HashMap::new();
        for v in vectors {
            if v.dim != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: v.dim,
                });
            }
            for (i, x) in v.iter() {
                *acc.entry(i).or_insert(0.0) += x;
            }
        }
        Self::from_pairs(dim, acc)
    }
}

/// Linear weights with an unregularized bias term: `predict(x) = <weights, x> + bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedWeights {
    pub weights: SparseVector,
    pub bias: f64,
}

impl AugmentedWeights {
    pub fn new(weights: SparseVector, bias: f64) -> Self {
        AugmentedWeights { weights, bias }
    }

    pub fn constant(dim: usize, bias: f64) -> Self {
        AugmentedWeights {
            weights: SparseVector::zeros(dim),
            bias,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.dim()
    }

    pub fn predict_raw(&self, x: &SparseVector) -> Result<f64> {
        Ok(self.weights.dot(x)? + self.bias)
    }

    #[inline]
    pub(crate) fn predict_raw_unchecked(&self, x: &SparseVector) -> f64 {
        self.weights.dot_unchecked(x) + self.bias
    }
}
