//! Sparse input vectors.
//!
//! Rendered observations are mostly background (value 0), so the first
//! dense layer only visits the nonzero entries.

/// A real vector of length `dim` storing only its nonzero entries.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseFeatures {
    dim: usize,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseFeatures {
    pub fn from_dense(dense: &[f64]) -> Self {
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for (i, &v) in dense.iter().enumerate() {
            if v != 0.0 {
                indices.push(i as u32);
                values.push(v);
            }
        }
        Self {
            dim: dense.len(),
            indices,
            values,
        }
    }

    /// Builds from `(index, value)` pairs in strictly increasing index order.
    pub fn from_pairs(dim: usize, pairs: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for (i, v) in pairs {
            debug_assert!(i < dim);
            debug_assert!(indices.last().is_none_or(|&last| (last as usize) < i));
            if v != 0.0 {
                indices.push(i as u32);
                values.push(v);
            }
        }
        Self { dim, indices, values }
    }

    pub fn one_hot(dim: usize, hot: usize) -> Self {
        Self::from_pairs(dim, [(hot, 1.0)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .map(|&i| i as usize)
            .zip(self.values.iter().copied())
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Anything that can be fed to a Q-function.
pub trait Featurize {
    fn features(&self) -> SparseFeatures;
}

impl Featurize for Vec<f64> {
    fn features(&self) -> SparseFeatures {
        SparseFeatures::from_dense(self)
    }
}

impl Featurize for SparseFeatures {
    fn features(&self) -> SparseFeatures {
        self.clone()
    }
}
