//! Sparse feature vectors and the handful of dense/sparse kernels the
//! solvers need.
//!
//! Every dot product in the solver is `sparse · dense`, with the dense side
//! being the primal weight vector `w`.

use std::fmt;

use crate::error::{Result, SvmError};

/// A sparse vector with strictly increasing indices and no stored zeros.
#[derive(Clone, Default, PartialEq)]
pub struct SparseVec {
    entries: Vec<(usize, f64)>,
}

impl fmt::Debug for SparseVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map()
            .entries(self.entries.iter().map(|(i, v)| (i, v)))
            .finish()
    }
}

impl SparseVec {
    pub fn empty() -> Self {
        SparseVec::default()
    }

    /// Builds a vector from `(index, value)` pairs.
    ///
    /// Indices must be strictly increasing and values finite. Exact zeros
    /// are dropped.
    pub fn new(pairs: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut entries: Vec<(usize, f64)> = Vec::new();
        let mut last: Option<usize> = None;
        for (index, value) in pairs {
            if let Some(previous) = last {
                if index <= previous {
                    return Err(SvmError::UnsortedIndices { previous, index });
                }
            }
            last = Some(index);
            if !value.is_finite() {
                return Err(SvmError::NonFinite("sparse vector entry"));
            }
            if value != 0.0 {
                entries.push((index, value));
            }
        }
        Ok(SparseVec { entries })
    }

    /// Builds a vector from arbitrary-order pairs, summing duplicates.
    pub fn from_unsorted(pairs: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut pairs: Vec<(usize, f64)> = pairs.into_iter().collect();
        pairs.sort_by_key(|&(i, _)| i);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => merged.push((i, v)),
            }
        }
        SparseVec::new(merged)
    }

    pub fn from_dense(values: &[f64]) -> Result<Self> {
        SparseVec::new(values.iter().copied().enumerate())
    }

    pub(crate) fn from_sorted_unchecked(entries: Vec<(usize, f64)>) -> Self {
        debug_assert!(entries.windows(2).all(|p| p[0].0 < p[1].0));
        debug_assert!(entries.iter().all(|&(_, v)| v != 0.0 && v.is_finite()));
        SparseVec { entries }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// One past the largest stored index, i.e. the smallest dimension that
    /// can hold this vector.
    pub fn required_dim(&self) -> usize {
        self.entries.last().map_or(0, |&(i, _)| i + 1)
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map_or(0.0, |pos| self.entries[pos].1)
    }

    pub fn to_dense(&self, dim: usize) -> Result<Vec<f64>> {
        self.check_dim(dim)?;
        let mut out = vec![0.0; dim];
        for &(i, v) in &self.entries {
            out[i] = v;
        }
        Ok(out)
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        match self.entries.last() {
            Some(&(index, _)) if index >= dim => Err(SvmError::IndexOutOfRange { index, dim }),
            _ => Ok(()),
        }
    }

    /// `Σ value · w[index]`.
    pub fn dot(&self, w: &[f64]) -> Result<f64> {
        self.check_dim(w.len())?;
        Ok(self.dot_in_bounds(w))
    }

    /// Dot product for callers that already validated the dimension.
    #[inline]
    pub(crate) fn dot_in_bounds(&self, w: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| v * w[i]).sum()
    }

    /// `w += a · self`.
    pub fn axpy(&self, a: f64, w: &mut [f64]) -> Result<()> {
        if !a.is_finite() {
            return Err(SvmError::NonFinite("axpy step"));
        }
        self.check_dim(w.len())?;
        self.axpy_in_bounds(a, w);
        Ok(())
    }

    #[inline]
    pub(crate) fn axpy_in_bounds(&self, a: f64, w: &mut [f64]) {
        for &(i, v) in &self.entries {
            w[i] += a * v;
        }
    }

    pub fn squared_norm(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v * v).sum()
    }

    /// Sparse-sparse inner product.
    pub fn dot_sparse(&self, other: &SparseVec) -> f64 {
        let (a, b) = (&self.entries, &other.entries);
        let (mut p, mut q, mut acc) = (0, 0, 0.0);
        while p < a.len() && q < b.len() {
            match a[p].0.cmp(&b[q].0) {
                std::cmp::Ordering::Less => p += 1,
                std::cmp::Ordering::Greater => q += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[p].1 * b[q].1;
                    p += 1;
                    q += 1;
                }
            }
        }
        acc
    }

    /// `‖self − other‖²`, computed on the merged support so identical
    /// vectors give exactly zero.
    pub fn squared_distance(&self, other: &SparseVec) -> f64 {
        let mut acc = 0.0;
        self.merge_with(other, |a, b| {
            let d = a - b;
            acc += d * d;
        });
        acc
    }

    /// `self − other`.
    pub fn sub(&self, other: &SparseVec) -> SparseVec {
        self.combine(other, |a, b| a - b)
    }

    pub fn add(&self, other: &SparseVec) -> SparseVec {
        self.combine(other, |a, b| a + b)
    }

    pub fn scale(&self, factor: f64) -> SparseVec {
        if factor == 0.0 {
            return SparseVec::empty();
        }
        SparseVec::from_sorted_unchecked(
            self.entries
                .iter()
                .map(|&(i, v)| (i, v * factor))
                .filter(|&(_, v)| v != 0.0)
                .collect(),
        )
    }

    /// Shifts every index by `offset` (block placement).
    pub fn shifted(&self, offset: usize) -> SparseVec {
        SparseVec::from_sorted_unchecked(self.entries.iter().map(|&(i, v)| (i + offset, v)).collect())
    }

    /// Appends an entry past the current last index.
    pub fn with_appended(&self, index: usize, value: f64) -> Result<SparseVec> {
        if let Some(&(last, _)) = self.entries.last() {
            if index <= last {
                return Err(SvmError::UnsortedIndices {
                    previous: last,
                    index,
                });
            }
        }
        if !value.is_finite() {
            return Err(SvmError::NonFinite("appended entry"));
        }
        let mut entries = self.entries.clone();
        if value != 0.0 {
            entries.push((index, value));
        }
        Ok(SparseVec { entries })
    }

    /// Per-coordinate map `value → f(index, value)`; zeros in the output are dropped.
    pub fn map_values(&self, mut f: impl FnMut(usize, f64) -> f64) -> SparseVec {
        SparseVec::from_sorted_unchecked(
            self.entries
                .iter()
                .map(|&(i, v)| (i, f(i, v)))
                .filter(|&(_, v)| v != 0.0)
                .collect(),
        )
    }

    fn merge_with(&self, other: &SparseVec, mut f: impl FnMut(f64, f64)) {
        let (a, b) = (&self.entries, &other.entries);
        let (mut p, mut q) = (0, 0);
        while p < a.len() || q < b.len() {
            let ia = a.get(p).map_or(usize::MAX, |e| e.0);
            let ib = b.get(q).map_or(usize::MAX, |e| e.0);
            if ia < ib {
                f(a[p].1, 0.0);
                p += 1;
            } else if ib < ia {
                f(0.0, b[q].1);
                q += 1;
            } else {
                f(a[p].1, b[q].1);
                p += 1;
                q += 1;
            }
        }
    }

    fn combine(&self, other: &SparseVec, op: impl Fn(f64, f64) -> f64) -> SparseVec {
        let (a, b) = (&self.entries, &other.entries);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut p, mut q) = (0, 0);
        while p < a.len() || q < b.len() {
            let ia = a.get(p).map_or(usize::MAX, |e| e.0);
            let ib = b.get(q).map_or(usize::MAX, |e| e.0);
            let (index, value) = if ia < ib {
                p += 1;
                (ia, op(a[p - 1].1, 0.0))
            } else if ib < ia {
                q += 1;
                (ib, op(0.0, b[q - 1].1))
            } else {
                p += 1;
                q += 1;
                (ia, op(a[p - 1].1, b[q - 1].1))
            };
            if value != 0.0 {
                out.push((index, value));
            }
        }
        SparseVec::from_sorted_unchecked(out)
    }
}

pub fn dense_dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn dense_squared_norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sv(pairs: &[(usize, f64)]) -> SparseVec {
        SparseVec::new(pairs.iter().copied()).unwrap()
    }

    #[test]
    fn dot_of_empty_is_zero() {
        assert_eq!(SparseVec::empty().dot(&[1.0, 2.0]).unwrap(), 0.0);
    }

    #[test]
    fn dot_hand_sum() {
        let x = sv(&[(0, 2.0), (3, 1.0)]);
        assert_eq!(x.dot(&[1.0, 0.0, 0.0, 5.0]).unwrap(), 7.0);
    }

    #[test]
    fn dot_out_of_range_is_error() {
        let x = sv(&[(4, 1.0)]);
        assert!(matches!(
            x.dot(&[0.0; 4]),
            Err(SvmError::IndexOutOfRange { index: 4, dim: 4 })
        ));
    }

    #[test]
    fn axpy_zero_step_is_identity() {
        let mut w = vec![1.0, -2.0];
        sv(&[(1, 3.0)]).axpy(0.0, &mut w).unwrap();
        assert_eq!(w, vec![1.0, -2.0]);
    }

    #[test]
    fn axpy_hand_sum() {
        let mut w = vec![0.0, 0.0];
        sv(&[(1, 3.0)]).axpy(1.0, &mut w).unwrap();
        assert_eq!(w, vec![0.0, 3.0]);
    }

    #[test]
    fn axpy_rejects_non_finite_step() {
        let mut w = vec![0.0];
        assert!(sv(&[(0, 1.0)]).axpy(f64::NAN, &mut w).is_err());
        assert!(sv(&[(0, 1.0)]).axpy(f64::INFINITY, &mut w).is_err());
    }

    #[test]
    fn squared_norm_examples() {
        assert_eq!(SparseVec::empty().squared_norm(), 0.0);
        assert_eq!(sv(&[(0, 3.0), (2, 4.0)]).squared_norm(), 25.0);
    }

    #[test]
    fn constructor_enforces_invariants() {
        assert!(SparseVec::new([(1, 1.0), (1, 2.0)]).is_err());
        assert!(SparseVec::new([(2, 1.0), (1, 2.0)]).is_err());
        assert!(SparseVec::new([(0, f64::NAN)]).is_err());
        let x = SparseVec::new([(0, 0.0), (3, 2.0)]).unwrap();
        assert_eq!(x.entries(), &[(3, 2.0)]);
    }

    #[test]
    fn sub_cancels_to_empty() {
        let x = sv(&[(0, 1.0), (5, -2.0)]);
        assert!(x.sub(&x).is_empty());
        assert_eq!(x.squared_distance(&x), 0.0);
    }

    fn arb_sparse(dim: usize) -> impl Strategy<Value = SparseVec> {
        proptest::collection::vec(proptest::option::of(-5.0f64..5.0), dim).prop_map(|vals| {
            SparseVec::new(
                vals.into_iter()
                    .enumerate()
                    .filter_map(|(i, v)| v.map(|v| (i, v))),
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn dot_matches_dense(x in arb_sparse(6), w in proptest::collection::vec(-5.0f64..5.0, 6)) {
            let dense = x.to_dense(6).unwrap();
            let oracle: f64 = dense.iter().zip(&w).map(|(a, b)| a * b).sum();
            prop_assert!((x.dot(&w).unwrap() - oracle).abs() <= 1e-12 * (1.0 + oracle.abs()));
        }

        #[test]
        fn squared_norm_is_self_dot(x in arb_sparse(6)) {
            let dense = x.to_dense(6).unwrap();
            let oracle = x.dot(&dense).unwrap();
            prop_assert!((x.squared_norm() - oracle).abs() <= 1e-12 * (1.0 + oracle));
        }

        #[test]
        fn sparse_algebra_matches_dense(x in arb_sparse(5), y in arb_sparse(5)) {
            let (dx, dy) = (x.to_dense(5).unwrap(), y.to_dense(5).unwrap());
            let diff = x.sub(&y).to_dense(5).unwrap();
            for k in 0..5 {
                prop_assert_eq!(diff[k], dx[k] - dy[k]);
            }
            let dist: f64 = dx.iter().zip(&dy).map(|(a, b)| (a - b) * (a - b)).sum();
            prop_assert!((x.squared_distance(&y) - dist).abs() <= 1e-12 * (1.0 + dist));
            prop_assert!((x.dot_sparse(&y) - dense_dot(&dx, &dy)).abs() <= 1e-12 * (1.0 + dist));
        }
    }
}
