//! Out-of-core learning over a stream of slack groups.
//!
//! The learner keeps a cache of constraints (the [`DualState`]'s working set)
//! that are likely to become support vectors. Each incoming example is asked
//! for its worst-offending constraint under the current `w`; violators are
//! admitted at `α = 0` and their gradient is added to a running upper bound.
//! Whenever that running bound and the dual lower bound drift further apart
//! than the tolerance, the cache is re-optimized with the batch solver,
//! hot-started from the cached `α`, and then pruned.
//!
//! Cycling over a finite source repeats this until a pass admits nothing and
//! the exact upper bound, accumulated during that same pass, closes the gap.

use std::fmt;

use crate::batch::{gap_satisfied, update_threshold, BatchConfig, BatchOutcome, BatchSolver};
use crate::error::{Result, SvmError};
use crate::problem::{eval_dual, Constraint, DualState, GroupId, PrimalAccumulator};

/// A group's most violated constraint and its gradient `l − w·x`.
#[derive(Clone, Debug, PartialEq)]
pub struct Offender {
    pub constraint: Constraint,
    pub gradient: f64,
}

/// One example after reduction: a slack group whose constraints may be
/// listed explicitly or only searched.
pub trait SlackGroup {
    fn id(&self) -> GroupId;

    /// `argmax_j l_ij − w·x_ij`; `None` only when the group is empty.
    fn worst_offender(&self, w: &[f64]) -> Result<Option<Offender>>;

    /// Every constraint of the group, when the set is finite and small.
    fn candidates(&self) -> Option<Vec<Constraint>> {
        None
    }
}

/// A group with an explicit constraint list.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteGroup {
    id: GroupId,
    constraints: Vec<Constraint>,
}

impl FiniteGroup {
    pub fn new(id: GroupId, constraints: Vec<Constraint>) -> Self {
        debug_assert!(constraints.iter().all(|c| c.group == id));
        FiniteGroup { id, constraints }
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn into_constraints(self) -> Vec<Constraint> {
        self.constraints
    }
}

impl SlackGroup for FiniteGroup {
    fn id(&self) -> GroupId {
        self.id
    }

    /// Exhaustive; ties go to the smallest local index.
    fn worst_offender(&self, w: &[f64]) -> Result<Option<Offender>> {
        let mut best: Option<(f64, &Constraint)> = None;
        for c in &self.constraints {
            let g = c.margin - c.x.dot(w)?;
            let better = match best {
                None => true,
                Some((bg, bc)) => g > bg || (g == bg && c.local < bc.local),
            };
            if better {
                best = Some((g, c));
            }
        }
        Ok(best.map(|(gradient, c)| Offender {
            constraint: c.clone(),
            gradient,
        }))
    }

    fn candidates(&self) -> Option<Vec<Constraint>> {
        Some(self.constraints.clone())
    }
}

/// A re-iterable stream of slack groups.
pub trait ExampleSource {
    type Group: SlackGroup;

    /// Length of the weight vector the groups are defined over.
    fn dim(&self) -> usize;

    fn next_group(&mut self) -> Result<Option<Self::Group>>;

    /// Restarts the stream from its first group.
    fn rewind(&mut self) -> Result<()>;
}

/// An in-memory source.
#[derive(Clone, Debug)]
pub struct VecSource<G> {
    dim: usize,
    groups: Vec<G>,
    pos: usize,
}

impl<G> VecSource<G> {
    pub fn new(dim: usize, groups: Vec<G>) -> Self {
        VecSource { dim, groups, pos: 0 }
    }

    pub fn groups(&self) -> &[G] {
        &self.groups
    }
}

impl<G: SlackGroup + Clone> ExampleSource for VecSource<G> {
    type Group = G;

    fn dim(&self) -> usize {
        self.dim
    }

    fn next_group(&mut self) -> Result<Option<G>> {
        let g = self.groups.get(self.pos).cloned();
        if g.is_some() {
            self.pos += 1;
        }
        Ok(g)
    }

    fn rewind(&mut self) -> Result<()> {
        self.pos = 0;
        Ok(())
    }
}

/// Applies `f` to every group of `inner`, e.g. to reparameterize under a
/// prior.
pub struct MapSource<S, F> {
    inner: S,
    f: F,
}

impl<S, F> MapSource<S, F> {
    pub fn new(inner: S, f: F) -> Self {
        MapSource { inner, f }
    }

    pub fn into_inner(self) -> S {
        self.inner
    }
}

impl<S, F, G> ExampleSource for MapSource<S, F>
where
    S: ExampleSource,
    F: FnMut(S::Group) -> Result<G>,
    G: SlackGroup,
{
    type Group = G;

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn next_group(&mut self) -> Result<Option<G>> {
        match self.inner.next_group()? {
            Some(g) => (self.f)(g).map(Some),
            None => Ok(None),
        }
    }

    fn rewind(&mut self) -> Result<()> {
        self.inner.rewind()
    }
}

/// Drains a source into a flat constraint list, for batch solves.
pub fn collect_constraints<S: ExampleSource>(source: &mut S) -> Result<Vec<Constraint>> {
    source.rewind()?;
    let mut out = Vec::new();
    while let Some(g) = source.next_group()? {
        let cands = g.candidates().ok_or_else(|| {
            SvmError::Config(format!("group {} cannot enumerate its constraints", g.id()))
        })?;
        out.extend(cands);
    }
    Ok(out)
}

/// Exact `L(w)` over every group of `source`, in one streaming pass.
pub fn streaming_primal<S: ExampleSource>(source: &mut S, w: &[f64]) -> Result<f64> {
    source.rewind()?;
    let mut acc = PrimalAccumulator::default();
    while let Some(g) = source.next_group()? {
        acc.add_group(g.worst_offender(w)?.map(|o| o.gradient));
    }
    Ok(acc.objective(w))
}

/// `lb` bounds the full-data optimum from below; `ub_running` is the last
/// optimize's cache upper bound plus the gradients admitted since.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OnlineBounds {
    pub lb: f64,
    pub ub_running: f64,
    pub tol: f64,
    /// The last optimize stopped at its sweep cap.
    pub stale: bool,
}

impl OnlineBounds {
    pub fn gap(&self) -> f64 {
        self.ub_running - self.lb
    }

    pub fn satisfied(&self) -> bool {
        gap_satisfied(self.lb, self.ub_running, self.tol)
    }
}

/// When to optimize the cache.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Schedule {
    /// Whenever the tracked gap exceeds the tolerance.
    Gap,
    /// After every `n` admissions, regardless of the gap.
    FixedRatio(usize),
    /// Only when the cache is full and at the end of each pass.
    MemoryLimit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrunePolicy {
    /// Drop every `α = 0` entry after each optimize.
    Aggressive,
    /// Drop entries that stayed at `α = 0` for this many optimize calls.
    Lazy(u32),
    Never,
}

impl PrunePolicy {
    /// Entries idle for this many optimizes are dropped under `Lazy`.
    pub const LAZY_DEFAULT: u32 = 50;
}

#[derive(Clone, Debug, PartialEq)]
pub struct OnlineConfig {
    pub tol: f64,
    pub schedule: Schedule,
    pub prune: PrunePolicy,
    /// Maximum number of cached constraints.
    pub cache_cap: Option<usize>,
    pub max_passes: usize,
    /// Settings for the inner batch solves; its `tol` is overridden.
    pub batch: BatchConfig,
}

impl Default for OnlineConfig {
    fn default() -> Self {
        OnlineConfig {
            tol: 1e-3,
            schedule: Schedule::Gap,
            prune: PrunePolicy::Aggressive,
            cache_cap: None,
            max_passes: 10,
            batch: BatchConfig::default(),
        }
    }
}

impl OnlineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(SvmError::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_passes == 0 {
            return Err(SvmError::Config("max passes must be at least 1".into()));
        }
        if self.cache_cap == Some(0) {
            return Err(SvmError::Config("cache cap must be at least 1".into()));
        }
        if self.schedule == Schedule::FixedRatio(0) {
            return Err(SvmError::Config("fixed ratio must be at least 1".into()));
        }
        Ok(())
    }
}

/// Counters for one pass over the source.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PassStats {
    pub pass: usize,
    pub examples: usize,
    pub admissions: usize,
    /// Worst offenders that were already cached.
    pub revisits: usize,
    pub optimize_calls: usize,
    /// Violators turned away because the cache was full.
    pub refused: usize,
    pub pruned: usize,
    pub cache_size: usize,
    pub peak_cache: usize,
    /// Exact `L(w)` when `w` did not change during the pass.
    pub exact_ub: Option<f64>,
}

impl PassStats {
    /// Nothing entered the cache and nothing was turned away.
    pub fn quiet(&self) -> bool {
        self.admissions == 0 && self.refused == 0
    }
}

/// A progress snapshot, printed as one `key=value` line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProgressRecord {
    pub pass: usize,
    pub seen: usize,
    pub lb: f64,
    pub ub_running: f64,
    pub cache: usize,
}

impl fmt::Display for ProgressRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "pass={} seen={} lb={} ub={} cache={}",
            self.pass, self.seen, self.lb, self.ub_running, self.cache
        )
    }
}

/// Result of [`OnlineLearner::run_cyclic`].
#[derive(Clone, Debug)]
pub struct CyclicOutcome {
    pub passes: usize,
    pub converged: bool,
    /// Exact full-data objective at the final `w`, when a pass measured it.
    pub true_ub: Option<f64>,
    pub stats: Vec<PassStats>,
}

/// The online solver state: cache, bounds, and the inner batch solver.
#[derive(Clone, Debug)]
pub struct OnlineLearner {
    config: OnlineConfig,
    state: DualState,
    solver: BatchSolver,
    bounds: OnlineBounds,
    /// Admissions since the last optimize.
    pending: usize,
    pass: usize,
    seen: usize,
    full: bool,
    current: PassStats,
    total_optimizes: usize,
    total_admissions: usize,
    peak_cache: usize,
    last_optimize: Option<BatchOutcome>,
}

impl OnlineLearner {
    pub fn new(dim: usize, config: OnlineConfig) -> Result<Self> {
        Self::with_state(DualState::new(dim), config)
    }

    /// Starts from an existing state (e.g. one with non-negativity set).
    pub fn with_state(state: DualState, config: OnlineConfig) -> Result<Self> {
        config.validate()?;
        let batch = BatchConfig {
            tol: config.tol,
            ..config.batch.clone()
        };
        let lb = eval_dual(&state);
        let peak_cache = state.len();
        Ok(OnlineLearner {
            bounds: OnlineBounds {
                lb,
                ub_running: if state.is_empty() { 0.0 } else { state.primal().objective },
                tol: config.tol,
                stale: false,
            },
            config,
            state,
            solver: BatchSolver::new(batch),
            pending: 0,
            pass: 0,
            seen: 0,
            full: false,
            current: PassStats::default(),
            total_optimizes: 0,
            total_admissions: 0,
            peak_cache,
            last_optimize: None,
        })
    }

    pub fn config(&self) -> &OnlineConfig {
        &self.config
    }

    pub fn state(&self) -> &DualState {
        &self.state
    }

    pub fn into_state(self) -> DualState {
        self.state
    }

    pub fn w(&self) -> &[f64] {
        self.state.w()
    }

    pub fn bounds(&self) -> OnlineBounds {
        self.bounds
    }

    pub fn cache_size(&self) -> usize {
        self.state.len()
    }

    pub fn peak_cache(&self) -> usize {
        self.peak_cache
    }

    pub fn total_optimizes(&self) -> usize {
        self.total_optimizes
    }

    pub fn total_admissions(&self) -> usize {
        self.total_admissions
    }

    pub fn last_optimize(&self) -> Option<&BatchOutcome> {
        self.last_optimize.as_ref()
    }

    pub fn progress(&self) -> ProgressRecord {
        ProgressRecord {
            pass: self.pass,
            seen: self.seen,
            lb: self.bounds.lb,
            ub_running: self.bounds.ub_running,
            cache: self.state.len(),
        }
    }

    /// Queries the worst offender of `group` and caches it if it violates
    /// its margin. Returns whether a constraint was admitted.
    pub fn process_example<G: SlackGroup + ?Sized>(&mut self, group: &G) -> Result<bool> {
        let off = group.worst_offender(self.state.w())?;
        self.consider(off)
    }

    fn consider(&mut self, off: Option<Offender>) -> Result<bool> {
        self.seen += 1;
        self.current.examples += 1;
        let Some(off) = off else {
            return Ok(false);
        };
        if off.gradient <= update_threshold(off.constraint.margin) {
            return Ok(false);
        }
        if self.state.set().find(off.constraint.key()).is_some() {
            self.current.revisits += 1;
            return Ok(false);
        }
        if self.full {
            self.current.refused += 1;
            return Ok(false);
        }
        if let Some(cap) = self.config.cache_cap {
            if self.state.len() >= cap {
                self.optimize_now();
                self.prune_with(PrunePolicy::Aggressive);
                if self.state.len() >= cap {
                    self.full = true;
                    self.current.refused += 1;
                    return Ok(false);
                }
                // w moved; the offender may no longer violate
                let g = off.constraint.gradient(self.state.w());
                if g <= update_threshold(off.constraint.margin) {
                    return Ok(false);
                }
                return self.admit(off.constraint, g);
            }
        }
        self.admit(off.constraint, off.gradient)
    }

    fn admit(&mut self, constraint: Constraint, gradient: f64) -> Result<bool> {
        self.state.insert(constraint, 0.0)?;
        self.bounds.ub_running += gradient;
        self.pending += 1;
        self.total_admissions += 1;
        self.current.admissions += 1;
        self.peak_cache = self.peak_cache.max(self.state.len());
        Ok(true)
    }

    fn wants_optimize(&self) -> bool {
        if self.pending == 0 {
            return false;
        }
        match self.config.schedule {
            Schedule::Gap => !self.bounds.satisfied(),
            Schedule::FixedRatio(n) => self.pending >= n,
            Schedule::MemoryLimit => false,
        }
    }

    /// Optimizes and prunes the cache if the schedule asks for it.
    pub fn maybe_optimize(&mut self) -> bool {
        if !self.wants_optimize() {
            return false;
        }
        self.optimize_now();
        self.prune();
        true
    }

    /// Hot-started batch optimize of the cache; resets the bounds to the
    /// returned certificate.
    pub fn optimize_now(&mut self) -> BatchOutcome {
        let out = self.solver.optimize(&mut self.state);
        self.bounds.lb = self.bounds.lb.max(out.bounds.lb);
        self.bounds.ub_running = out.bounds.ub;
        self.bounds.stale = !out.converged;
        self.pending = 0;
        self.total_optimizes += 1;
        self.current.optimize_calls += 1;
        for e in self.state.entries_mut() {
            if e.alpha == 0.0 {
                e.idle = e.idle.saturating_add(1);
            } else {
                e.idle = 0;
            }
        }
        self.last_optimize = Some(out.clone());
        out
    }

    /// Applies the configured pruning policy. Only meaningful right after
    /// an optimize.
    pub fn prune(&mut self) -> usize {
        self.prune_with(self.config.prune)
    }

    /// Prunes with an explicit policy instead of the configured one.
    pub fn prune_with(&mut self, policy: PrunePolicy) -> usize {
        let removed = match policy {
            PrunePolicy::Aggressive => self.state.retain(|e| e.alpha != 0.0),
            PrunePolicy::Lazy(n) => self.state.retain(|e| e.alpha != 0.0 || e.idle < n),
            PrunePolicy::Never => 0,
        };
        self.current.pruned += removed;
        removed
    }

    /// One pass over `source` in stream order.
    ///
    /// Every group's worst-offender gradient is accumulated as it is
    /// visited; if `w` never changed during the pass the accumulated value
    /// is the exact full-data objective and is reported in
    /// [`PassStats::exact_ub`].
    pub fn run_pass<S: ExampleSource>(&mut self, source: &mut S) -> Result<PassStats> {
        if source.dim() != self.state.dim() {
            return Err(SvmError::DimensionMismatch {
                expected: self.state.dim(),
                found: source.dim(),
            });
        }
        source.rewind()?;
        self.pass += 1;
        self.seen = 0;
        self.full = false;
        self.current = PassStats {
            pass: self.pass,
            ..PassStats::default()
        };
        let mut acc = PrimalAccumulator::default();
        let mut w_changed = false;
        while let Some(group) = source.next_group()? {
            let optimizes = self.current.optimize_calls;
            let off = group.worst_offender(self.state.w())?;
            acc.add_group(off.as_ref().map(|o| o.gradient));
            self.consider(off)?;
            self.maybe_optimize();
            w_changed |= self.current.optimize_calls != optimizes;
        }
        if !w_changed {
            self.current.exact_ub = Some(acc.objective(self.state.w()));
        }
        // close the pass with a certified cache
        if self.pending > 0 || !self.bounds.satisfied() {
            self.optimize_now();
            self.prune();
        }
        self.current.cache_size = self.state.len();
        self.current.peak_cache = self.peak_cache;
        Ok(self.current.clone())
    }

    /// Repeats passes until one admits nothing and its exact objective
    /// satisfies the gap against `lb`, or `max_passes` is reached.
    pub fn run_cyclic<S: ExampleSource>(&mut self, source: &mut S) -> Result<CyclicOutcome> {
        self.run_cyclic_with(source, |_, _| {})
    }

    /// [`run_cyclic`](Self::run_cyclic) with a callback after every pass.
    pub fn run_cyclic_with<S: ExampleSource>(
        &mut self,
        source: &mut S,
        mut on_pass: impl FnMut(&PassStats, ProgressRecord),
    ) -> Result<CyclicOutcome> {
        let mut stats = Vec::new();
        let mut converged = false;
        let mut true_ub = None;
        for _ in 0..self.config.max_passes {
            let s = self.run_pass(source)?;
            let quiet = s.quiet() && s.optimize_calls == 0;
            true_ub = if quiet { s.exact_ub } else { None };
            on_pass(&s, self.progress());
            stats.push(s);
            if let (true, Some(ub)) = (quiet, true_ub) {
                if gap_satisfied(self.bounds.lb, ub, self.config.tol) {
                    converged = true;
                    break;
                }
            }
        }
        Ok(CyclicOutcome {
            passes: stats.len(),
            converged,
            true_ub,
            stats,
        })
    }
}
