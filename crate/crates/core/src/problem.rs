//! The shared-slack constraint model and exact objective evaluation.
//!
//! A problem is a collection of constraints `w·x_ij ≥ l_ij − ξ_i`, grouped by
//! example `i`. The dual has one variable per constraint, each non-negative,
//! with the per-group cap `Σ_j α_ij ≤ 1`.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Result, SvmError};
use crate::extensions::NonNegState;
use crate::sparse::{dense_squared_norm, SparseVec};

/// Identifier of a slack group (one training example after reduction).
pub type GroupId = u64;

/// `(group, local)` identifies a constraint uniquely.
pub type ConstraintKey = (GroupId, u64);

/// Tolerance on the per-group cap when checking feasibility.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// One linear constraint `w·x ≥ margin − ξ_group`.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub group: GroupId,
    pub local: u64,
    pub x: SparseVec,
    pub margin: f64,
    sqnorm: f64,
}

impl Constraint {
    pub fn new(group: GroupId, local: u64, x: SparseVec, margin: f64) -> Result<Self> {
        if !margin.is_finite() {
            return Err(SvmError::NonFinite("constraint margin"));
        }
        let sqnorm = x.squared_norm();
        Ok(Constraint {
            group,
            local,
            x,
            margin,
            sqnorm,
        })
    }

    /// Cached `x·x`.
    pub fn sqnorm(&self) -> f64 {
        self.sqnorm
    }

    pub fn key(&self) -> ConstraintKey {
        (self.group, self.local)
    }

    /// `l − w·x`.
    pub fn gradient(&self, w: &[f64]) -> f64 {
        self.margin - self.x.dot_in_bounds(w)
    }
}

/// A cached constraint together with its dual variable.
#[derive(Clone, Debug)]
pub struct Entry {
    pub constraint: Constraint,
    pub alpha: f64,
    /// Consecutive optimize calls this entry has spent at `α = 0`.
    pub(crate) idle: u32,
}

/// Per-group bookkeeping: the running sum `α_i` and member positions.
#[derive(Clone, Debug)]
pub struct Group {
    pub id: GroupId,
    pub alpha_sum: f64,
    pub(crate) members: Vec<usize>,
}

impl Group {
    pub fn members(&self) -> &[usize] {
        &self.members
    }
}

/// The set of constraints held in memory, with their dual variables.
///
/// For batch solves this is the whole problem; for the online solver it is
/// the cache of likely support vectors.
#[derive(Clone, Debug, Default)]
pub struct WorkingSet {
    entries: Vec<Entry>,
    entry_group: Vec<usize>,
    groups: Vec<Group>,
    group_pos: HashMap<GroupId, usize>,
    keys: HashMap<ConstraintKey, usize>,
}

impl WorkingSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn entry(&self, idx: usize) -> &Entry {
        &self.entries[idx]
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    /// Position of the group that owns entry `idx`.
    pub fn group_of(&self, idx: usize) -> usize {
        self.entry_group[idx]
    }

    pub fn group(&self, pos: usize) -> &Group {
        &self.groups[pos]
    }

    pub fn find(&self, key: ConstraintKey) -> Option<usize> {
        self.keys.get(&key).copied()
    }

    pub fn alpha(&self, key: ConstraintKey) -> Option<f64> {
        self.find(key).map(|i| self.entries[i].alpha)
    }

    pub fn group_alpha_sum(&self, id: GroupId) -> f64 {
        self.group_pos
            .get(&id)
            .map_or(0.0, |&g| self.groups[g].alpha_sum)
    }

    pub fn support_vector_count(&self) -> usize {
        self.entries.iter().filter(|e| e.alpha > 0.0).count()
    }

    fn push(&mut self, constraint: Constraint, alpha: f64) -> Result<usize> {
        let key = constraint.key();
        if self.keys.contains_key(&key) {
            return Err(SvmError::DuplicateKey {
                group: key.0,
                local: key.1,
            });
        }
        let idx = self.entries.len();
        let gpos = match self.group_pos.get(&constraint.group) {
            Some(&g) => g,
            None => {
                self.groups.push(Group {
                    id: constraint.group,
                    alpha_sum: 0.0,
                    members: Vec::new(),
                });
                self.group_pos.insert(constraint.group, self.groups.len() - 1);
                self.groups.len() - 1
            }
        };
        self.groups[gpos].members.push(idx);
        self.groups[gpos].alpha_sum += alpha;
        self.keys.insert(key, idx);
        self.entry_group.push(gpos);
        self.entries.push(Entry {
            constraint,
            alpha,
            idle: 0,
        });
        Ok(idx)
    }

    /// Keeps entries for which `keep` is true. Group sums of surviving
    /// groups are carried over unchanged; groups left without members are
    /// dropped.
    pub(crate) fn retain(&mut self, mut keep: impl FnMut(&Entry) -> bool) -> usize {
        let before = self.entries.len();
        let old_sums: HashMap<GroupId, f64> =
            self.groups.iter().map(|g| (g.id, g.alpha_sum)).collect();
        let entries = std::mem::take(&mut self.entries);
        *self = WorkingSet::default();
        for e in entries.into_iter().filter(|e| keep(e)) {
            let idle = e.idle;
            let idx = self
                .push(e.constraint, 0.0)
                .expect("keys were unique before retain");
            self.entries[idx].alpha = e.alpha;
            self.entries[idx].idle = idle;
        }
        for g in &mut self.groups {
            g.alpha_sum = old_sums[&g.id];
        }
        before - self.entries.len()
    }
}

/// The complete state of a dual solve.
#[derive(Clone, Debug)]
pub struct DualState {
    dim: usize,
    w: Vec<f64>,
    l_alpha: f64,
    set: WorkingSet,
    nonneg: Option<NonNegState>,
}

impl DualState {
    pub fn new(dim: usize) -> Self {
        DualState {
            dim,
            w: vec![0.0; dim],
            l_alpha: 0.0,
            set: WorkingSet::default(),
            nonneg: None,
        }
    }

    /// All constraints at `α = 0`.
    pub fn from_constraints(dim: usize, constraints: impl IntoIterator<Item = Constraint>) -> Result<Self> {
        let mut state = DualState::new(dim);
        for c in constraints {
            state.insert(c, 0.0)?;
        }
        Ok(state)
    }

    /// Constraints paired with warm-start dual values.
    pub fn with_alpha(
        dim: usize,
        constraints: impl IntoIterator<Item = (Constraint, f64)>,
    ) -> Result<Self> {
        let mut state = DualState::new(dim);
        for (c, a) in constraints {
            state.insert(c, a)?;
        }
        Ok(state)
    }

    /// Attaches non-negativity constraints on the coordinates flagged in
    /// `mask`. Must be called before any update; `w` is re-projected.
    pub fn set_nonneg(&mut self, mask: Vec<bool>) -> Result<()> {
        if mask.len() != self.dim {
            return Err(SvmError::Config(format!(
                "non-negativity mask has length {}, expected {}",
                mask.len(),
                self.dim
            )));
        }
        if !mask.iter().any(|&m| m) {
            self.clear_nonneg();
            return Ok(());
        }
        let raw = self.raw_w().to_vec();
        let nn = NonNegState::new(mask, raw);
        self.w = nn.effective();
        self.nonneg = Some(nn);
        Ok(())
    }

    pub fn clear_nonneg(&mut self) {
        if let Some(nn) = self.nonneg.take() {
            self.w = nn.into_raw();
        }
    }

    pub fn nonneg(&self) -> Option<&NonNegState> {
        self.nonneg.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The effective primal vector used for gradients and prediction.
    pub fn w(&self) -> &[f64] {
        &self.w
    }

    /// `Σ α_ij x_ij` without the non-negativity correction.
    pub fn raw_w(&self) -> &[f64] {
        match &self.nonneg {
            Some(nn) => nn.raw(),
            None => &self.w,
        }
    }

    pub fn l_alpha(&self) -> f64 {
        self.l_alpha
    }

    pub fn set(&self) -> &WorkingSet {
        &self.set
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    pub fn alpha(&self, key: ConstraintKey) -> Option<f64> {
        self.set.alpha(key)
    }

    /// Inserts a constraint with dual value `alpha`, updating `w` and `l(α)`.
    pub fn insert(&mut self, c: Constraint, alpha: f64) -> Result<usize> {
        c.x.check_dim(self.dim)?;
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(SvmError::Infeasible(format!(
                "alpha {alpha} for ({}, {})",
                c.group, c.local
            )));
        }
        let sum = self.set.group_alpha_sum(c.group) + alpha;
        if sum > 1.0 + FEASIBILITY_TOL {
            return Err(SvmError::Infeasible(format!(
                "group {} alpha sum {sum} exceeds 1",
                c.group
            )));
        }
        if alpha != 0.0 {
            move_w(&mut self.w, &mut self.nonneg, &c.x, alpha);
            self.l_alpha += alpha * c.margin;
        }
        self.set.push(c, alpha)
    }

    /// `α_idx += a` with matching updates to `α_i`, `w`, and `l(α)`.
    pub(crate) fn apply_single(&mut self, idx: usize, a: f64) {
        let gpos = self.set.entry_group[idx];
        let entry = &mut self.set.entries[idx];
        entry.alpha = (entry.alpha + a).max(0.0);
        let margin = entry.constraint.margin;
        let group = &mut self.set.groups[gpos];
        group.alpha_sum = (group.alpha_sum + a).max(0.0);
        self.l_alpha += a * margin;
        move_w(
            &mut self.w,
            &mut self.nonneg,
            &self.set.entries[idx].constraint.x,
            a,
        );
    }

    /// `α_j += a`, `α_k −= a`; the group sum is unchanged.
    pub(crate) fn apply_pair(&mut self, j: usize, k: usize, a: f64) {
        debug_assert_eq!(self.set.entry_group[j], self.set.entry_group[k]);
        {
            let ej = &mut self.set.entries[j];
            ej.alpha = (ej.alpha + a).max(0.0);
        }
        {
            let ek = &mut self.set.entries[k];
            ek.alpha = (ek.alpha - a).max(0.0);
        }
        let (cj, ck) = (&self.set.entries[j].constraint, &self.set.entries[k].constraint);
        self.l_alpha += a * (cj.margin - ck.margin);
        let diff = cj.x.sub(&ck.x);
        move_w(&mut self.w, &mut self.nonneg, &diff, a);
    }

    pub(crate) fn retain(&mut self, keep: impl FnMut(&Entry) -> bool) -> usize {
        self.set.retain(keep)
    }

    pub(crate) fn entries_mut(&mut self) -> &mut [Entry] {
        &mut self.set.entries
    }

    /// `Σ α_ij x_ij` recomputed from scratch, with the non-negativity
    /// correction applied when active.
    pub fn rebuild_w(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.dim];
        for e in &self.set.entries {
            if e.alpha != 0.0 {
                e.constraint.x.axpy_in_bounds(e.alpha, &mut w);
            }
        }
        if let Some(nn) = &self.nonneg {
            for (k, v) in w.iter_mut().enumerate() {
                if nn.is_constrained(k) {
                    *v = v.max(0.0);
                }
            }
        }
        w
    }

    pub fn rebuild_l_alpha(&self) -> f64 {
        self.set
            .entries
            .iter()
            .map(|e| e.alpha * e.constraint.margin)
            .sum()
    }

    /// Replaces the tracked `w` and `l(α)` with values recomputed from `α`.
    pub fn resync(&mut self) {
        let mut raw = vec![0.0; self.dim];
        for e in &self.set.entries {
            if e.alpha != 0.0 {
                e.constraint.x.axpy_in_bounds(e.alpha, &mut raw);
            }
        }
        match &mut self.nonneg {
            Some(nn) => {
                nn.reset_raw(raw);
                self.w = nn.effective();
            }
            None => self.w = raw,
        }
        self.l_alpha = self.rebuild_l_alpha();
    }

    /// Verifies the dual-state invariants, returning a description of the
    /// first violation.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        for e in &self.set.entries {
            if e.alpha.is_nan() || e.alpha < 0.0 {
                return Err(format!("negative alpha {} at {:?}", e.alpha, e.constraint.key()));
            }
        }
        for g in &self.set.groups {
            let sum: f64 = g.members.iter().map(|&i| self.set.entries[i].alpha).sum();
            if (sum - g.alpha_sum).abs() > FEASIBILITY_TOL {
                return Err(format!(
                    "group {} tracked sum {} differs from {}",
                    g.id, g.alpha_sum, sum
                ));
            }
            if g.alpha_sum < -FEASIBILITY_TOL || g.alpha_sum > 1.0 + FEASIBILITY_TOL {
                return Err(format!("group {} sum {} outside [0, 1]", g.id, g.alpha_sum));
            }
        }
        let rebuilt = self.rebuild_w();
        let scale = 1.0 + self.w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (k, (a, b)) in self.w.iter().zip(&rebuilt).enumerate() {
            if (a - b).abs() > 1e-8 * scale {
                return Err(format!("w[{k}] = {a} but rebuilt value is {b}"));
            }
        }
        let l = self.rebuild_l_alpha();
        if (l - self.l_alpha).abs() > 1e-8 * (1.0 + l.abs()) {
            return Err(format!("l(alpha) tracked {} vs rebuilt {}", self.l_alpha, l));
        }
        Ok(())
    }

    /// Exact primal objective over the constraints held in this state.
    pub fn primal(&self) -> PrimalEvaluation {
        eval_primal(&self.w, self.set.entries.iter().map(|e| &e.constraint))
    }
}

fn move_w(w: &mut [f64], nonneg: &mut Option<NonNegState>, x: &SparseVec, a: f64) {
    match nonneg {
        Some(nn) => nn.step(x, a, w),
        None => x.axpy_in_bounds(a, w),
    }
}

/// Primal objective `½‖w‖² + Σ_i ξ_i` with the per-group slacks.
#[derive(Clone, Debug, PartialEq)]
pub struct PrimalEvaluation {
    pub objective: f64,
    pub per_group_slack: BTreeMap<GroupId, f64>,
}

impl PrimalEvaluation {
    pub fn loss(&self) -> f64 {
        self.per_group_slack.values().sum()
    }
}

/// `L(w) = ½‖w‖² + Σ_i max_j max(0, l_ij − w·x_ij)`.
pub fn eval_primal<'a>(w: &[f64], constraints: impl IntoIterator<Item = &'a Constraint>) -> PrimalEvaluation {
    let mut per_group_slack: BTreeMap<GroupId, f64> = BTreeMap::new();
    for c in constraints {
        let slack = (c.margin - c.x.dot_in_bounds(w)).max(0.0);
        let s = per_group_slack.entry(c.group).or_insert(0.0);
        *s = s.max(slack);
    }
    let loss: f64 = per_group_slack.values().sum();
    PrimalEvaluation {
        objective: 0.5 * dense_squared_norm(w) + loss,
        per_group_slack,
    }
}

/// `F(α) = −½‖w‖² + l(α)`, using the tracked `w` and `l(α)`.
pub fn eval_dual(state: &DualState) -> f64 {
    -0.5 * dense_squared_norm(&state.w) + state.l_alpha
}

/// Streaming accumulator for the primal objective, one group at a time.
#[derive(Clone, Debug, Default)]
pub struct PrimalAccumulator {
    loss: f64,
    groups: usize,
}

impl PrimalAccumulator {
    /// Adds a group's worst gradient `max_j (l_ij − w·x_ij)`; `None` for an
    /// empty group.
    pub fn add_group(&mut self, worst_gradient: Option<f64>) {
        self.groups += 1;
        if let Some(g) = worst_gradient {
            self.loss += g.max(0.0);
        }
    }

    pub fn loss(&self) -> f64 {
        self.loss
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    pub fn objective(&self, w: &[f64]) -> f64 {
        0.5 * dense_squared_norm(w) + self.loss
    }
}
