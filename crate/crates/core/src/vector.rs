//! Sparse and dense feature vectors behind one dot-product interface.

use crate::Scalar;

/// Anything a linear model can score: a fixed-dimension real vector.
pub trait FeatureVector<T: Scalar> {
    fn dim(&self) -> usize;

    /// `⟨self, weights⟩`; `weights.len()` must equal `self.dim()`.
    fn dot(&self, weights: &[T]) -> T;

    /// `target += scale * self`.
    fn add_scaled_to(&self, scale: T, target: &mut [T]);
}

/// Sparse vector with strictly ascending indices and no stored zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector<T> {
    dim: usize,
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> SparseVector<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from `(index, value)` pairs in any order. Repeated indices are
    /// summed and zero results are dropped.
    ///
    /// Panics if an index is out of range or a value is not finite.
    pub fn from_entries(dim: usize, entries: impl IntoIterator<Item = (usize, T)>) -> Self {
        let mut entries: Vec<(usize, T)> = entries.into_iter().collect();
        entries.sort_by_key(|&(i, _)| i);
        let mut indices: Vec<usize> = Vec::with_capacity(entries.len());
        let mut values: Vec<T> = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            assert!(i < dim, "index {i} out of range for dimension {dim}");
            assert!(v.is_finite(), "non-finite sparse entry at index {i}");
            match indices.last() {
                Some(&last) if last == i => *values.last_mut().unwrap() += v,
                _ => {
                    indices.push(i);
                    values.push(v);
                }
            }
        }
        let mut out = Self::zeros(dim);
        for (i, v) in indices.into_iter().zip(values) {
            if v != T::zero() {
                out.indices.push(i);
                out.values.push(v);
            }
        }
        out
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_zero(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn get(&self, index: usize) -> T {
        self.indices
            .binary_search(&index)
            .map(|k| self.values[k])
            .unwrap_or_else(|_| T::zero())
    }

    pub fn norm(&self) -> T {
        self.values.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    /// Scales to unit Euclidean norm; the zero vector is returned unchanged.
    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        if n > T::zero() {
            for v in &mut self.values {
                *v /= n;
            }
        }
        self
    }

    pub fn to_dense(&self) -> DenseVector<T> {
        let mut values = vec![T::zero(); self.dim];
        for (i, v) in self.iter() {
            values[i] = v;
        }
        DenseVector::new(values)
    }
}

impl<T: Scalar> FeatureVector<T> for SparseVector<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn dot(&self, weights: &[T]) -> T {
        debug_assert_eq!(weights.len(), self.dim);
        self.iter().map(|(i, v)| v * weights[i]).sum()
    }

    fn add_scaled_to(&self, scale: T, target: &mut [T]) {
        for (i, v) in self.iter() {
            target[i] += scale * v;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseVector<T> {
    values: Vec<T>,
}

impl<T: Scalar> DenseVector<T> {
    pub fn new(values: Vec<T>) -> Self {
        Self { values }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(vec![T::zero(); dim])
    }

    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<T> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

impl<T: Scalar> FeatureVector<T> for DenseVector<T> {
    fn dim(&self) -> usize {
        self.values.len()
    }

    fn dot(&self, weights: &[T]) -> T {
        debug_assert_eq!(weights.len(), self.values.len());
        self.values.iter().zip(weights).map(|(&a, &b)| a * b).sum()
    }

    fn add_scaled_to(&self, scale: T, target: &mut [T]) {
        for (t, &v) in target.iter_mut().zip(&self.values) {
            *t += scale * v;
        }
    }
}

impl<T: Scalar> From<Vec<T>> for DenseVector<T> {
    fn from(values: Vec<T>) -> Self {
        Self::new(values)
    }
}

impl<T: Scalar, V: FeatureVector<T>> FeatureVector<T> for &V {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn dot(&self, weights: &[T]) -> T {
        (**self).dot(weights)
    }

    fn add_scaled_to(&self, scale: T, target: &mut [T]) {
        (**self).add_scaled_to(scale, target)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_construction_sorts_merges_and_drops_zeros() {
        let v = SparseVector::from_entries(5, vec![(3, 1.0), (1, 2.0), (3, -1.0), (0, 0.0), (4, 0.5)]);
        assert_eq!(v.iter().collect::<Vec<_>>(), vec![(1, 2.0), (4, 0.5)]);
        assert_eq!(v.get(3), 0.0);
        assert_eq!(v.dim(), 5);
    }

    #[test]
    #[should_panic]
    fn sparse_rejects_out_of_range() {
        SparseVector::from_entries(2, vec![(2, 1.0f64)]);
    }

    #[test]
    fn sparse_and_dense_agree() {
        let s = SparseVector::from_entries(4, vec![(0, 1.5), (2, -2.0)]);
        let d = s.to_dense();
        let w = [0.5, 9.0, 0.25, -3.0];
        assert_eq!(s.dot(&w), d.dot(&w));
        let mut a = vec![0.0; 4];
        let mut b = vec![0.0; 4];
        s.add_scaled_to(2.0, &mut a);
        d.add_scaled_to(2.0, &mut b);
        assert_eq!(a, b);
    }

    #[test]
    fn normalization() {
        let v = SparseVector::from_entries(3, vec![(0, 4.0f64), (1, 1.0)]).normalized();
        let r = 17f64.sqrt();
        assert!((v.get(0) - 4.0 / r).abs() < 1e-15);
        assert!((v.get(1) - 1.0 / r).abs() < 1e-15);
        assert!(SparseVector::<f64>::zeros(3).normalized().is_zero());
    }
}
