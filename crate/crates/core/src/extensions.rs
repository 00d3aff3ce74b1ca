//! Non-negativity constraints on a subset of weights, and Gaussian-prior
//! regularization by reparameterization.

use std::collections::BTreeSet;

use crate::error::{Result, SvmError};
use crate::problem::{Constraint, DualState};
use crate::sparse::SparseVec;

/// Coordinates `k` constrained to `w_k ≥ 0`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NonNegSpec {
    indices: BTreeSet<usize>,
}

impl NonNegSpec {
    pub fn new(indices: impl IntoIterator<Item = usize>, dim: usize) -> Result<Self> {
        let indices: BTreeSet<usize> = indices.into_iter().collect();
        if let Some(&index) = indices.iter().next_back() {
            if index >= dim {
                return Err(SvmError::IndexOutOfRange { index, dim });
            }
        }
        Ok(NonNegSpec { indices })
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn mask(&self, dim: usize) -> Vec<bool> {
        let mut mask = vec![false; dim];
        for &k in &self.indices {
            if k < dim {
                mask[k] = true;
            }
        }
        mask
    }
}

/// The raw dual combination `Σ α_ij x_ij` and the multiplier `β` that keeps
/// constrained coordinates of `w = raw + β` non-negative.
///
/// `β_k = max(0, −raw_k)` on constrained coordinates and zero elsewhere, so
/// the effective weight is `max(raw_k, 0)` there and `raw_k` everywhere else.
#[derive(Clone, Debug)]
pub struct NonNegState {
    mask: Vec<bool>,
    raw: Vec<f64>,
    beta: Vec<f64>,
}

impl NonNegState {
    pub fn new(mask: Vec<bool>, raw: Vec<f64>) -> Self {
        let beta = raw
            .iter()
            .zip(&mask)
            .map(|(&r, &m)| if m { (-r).max(0.0) } else { 0.0 })
            .collect();
        NonNegState { mask, raw, beta }
    }

    pub fn is_constrained(&self, k: usize) -> bool {
        self.mask[k]
    }

    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn effective(&self) -> Vec<f64> {
        self.raw
            .iter()
            .zip(&self.mask)
            .map(|(&r, &m)| if m { r.max(0.0) } else { r })
            .collect()
    }

    pub(crate) fn into_raw(self) -> Vec<f64> {
        self.raw
    }

    pub(crate) fn reset_raw(&mut self, raw: Vec<f64>) {
        *self = NonNegState::new(std::mem::take(&mut self.mask), raw);
    }

    /// Coordinate-descent step on the raw vector followed by the `β`
    /// update on the touched coordinates.
    pub(crate) fn step(&mut self, x: &SparseVec, a: f64, w: &mut [f64]) {
        for &(k, v) in x.entries() {
            self.raw[k] += a * v;
            let r = self.raw[k];
            if self.mask[k] {
                self.beta[k] = (-r).max(0.0);
                w[k] = r.max(0.0);
            } else {
                w[k] = r;
            }
        }
    }
}

/// Recomputes the effective `w` of a state from its raw combination.
///
/// The solver applies this after every update automatically; the explicit
/// form is useful after editing `α` by other means.
pub fn nonneg_project(state: &mut DualState) {
    if state.nonneg().is_some() {
        state.resync();
    }
}

/// Diagonal Gaussian prior: mean `w0` and `R = Σ^{-1/2}` stored as its
/// diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct RegularizerSpec {
    w0: Vec<f64>,
    r_diag: Vec<f64>,
}

impl RegularizerSpec {
    pub fn new(w0: Vec<f64>, r_diag: Vec<f64>) -> Result<Self> {
        if w0.len() != r_diag.len() {
            return Err(SvmError::Config(format!(
                "prior mean has length {} but scale has length {}",
                w0.len(),
                r_diag.len()
            )));
        }
        if w0.iter().any(|v| !v.is_finite()) {
            return Err(SvmError::NonFinite("prior mean"));
        }
        if let Some(bad) = r_diag.iter().find(|&&r| !(r.is_finite() && r > 0.0)) {
            return Err(SvmError::Config(format!(
                "prior scale entries must be positive and finite, found {bad}"
            )));
        }
        Ok(RegularizerSpec { w0, r_diag })
    }

    pub fn identity(dim: usize) -> Self {
        RegularizerSpec {
            w0: vec![0.0; dim],
            r_diag: vec![1.0; dim],
        }
    }

    /// Builds the prior from per-coordinate variances `σ²_k`.
    pub fn from_variances(w0: Vec<f64>, variances: &[f64]) -> Result<Self> {
        if let Some(bad) = variances.iter().find(|&&v| !(v.is_finite() && v > 0.0)) {
            return Err(SvmError::Config(format!("prior variance must be positive, found {bad}")));
        }
        RegularizerSpec::new(w0, variances.iter().map(|v| 1.0 / v.sqrt()).collect())
    }

    pub fn dim(&self) -> usize {
        self.w0.len()
    }

    pub fn w0(&self) -> &[f64] {
        &self.w0
    }

    pub fn r_diag(&self) -> &[f64] {
        &self.r_diag
    }

    pub fn is_identity(&self) -> bool {
        self.w0.iter().all(|&v| v == 0.0) && self.r_diag.iter().all(|&r| r == 1.0)
    }

    /// `x̂ = R⁻¹x`.
    pub fn transform_features(&self, x: &SparseVec) -> Result<SparseVec> {
        x.check_dim(self.dim())?;
        Ok(x.map_values(|k, v| v / self.r_diag[k]))
    }

    /// Maps one constraint into the reparameterized problem:
    /// `x̂ = R⁻¹x`, `l̂ = l − w0·x`.
    pub fn transform(&self, c: &Constraint) -> Result<Constraint> {
        let x_hat = self.transform_features(&c.x)?;
        let shift = c.x.dot(&self.w0)?;
        Constraint::new(c.group, c.local, x_hat, c.margin - shift)
    }

    /// Original-space weights `w = ŵR⁻¹ + w0`.
    pub fn recover_w(&self, w_hat: &[f64]) -> Vec<f64> {
        w_hat
            .iter()
            .zip(&self.r_diag)
            .zip(&self.w0)
            .map(|((wh, r), m)| wh / r + m)
            .collect()
    }
}

/// Reparameterizes a constraint set under `spec`.
pub fn reparameterize(constraints: &[Constraint], spec: &RegularizerSpec) -> Result<Vec<Constraint>> {
    constraints.iter().map(|c| spec.transform(c)).collect()
}

/// Original-space score `w·x = (ŵ + w0R)·x̂`.
pub fn recover_score(w_hat: &[f64], spec: &RegularizerSpec, x_hat: &SparseVec) -> Result<f64> {
    x_hat.check_dim(spec.dim())?;
    Ok(x_hat
        .entries()
        .iter()
        .map(|&(k, v)| (w_hat[k] + spec.w0[k] * spec.r_diag[k]) * v)
        .sum())
}
