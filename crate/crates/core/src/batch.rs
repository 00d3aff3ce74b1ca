//! Dual coordinate ascent over a fixed, in-memory constraint set.
//!
//! Each step picks one dual variable `α_ij`, computes its gradient
//! `g_ij = l_ij − w·x_ij` from the tracked primal vector, and either moves it
//! alone (clipped to the feasible box) or, when its group's cap `Σ_j α_ij ≤ 1`
//! is active, trades mass with a partner `α_ik` in the same group.
//!
//! Sweeps visit the cache in a fresh random permutation. Convergence is
//! certified by the duality gap between `F(α)` and `L(w(α))`; a running
//! approximation of the upper bound built from the gradients seen during the
//! sweep gates the exact (full-pass) evaluation.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::problem::{eval_dual, Constraint, DualState};
use crate::sparse::dense_squared_norm;

/// Group sums at or above `1 − CAP_SLACK` count as saturated.
const CAP_SLACK: f64 = 1e-12;

/// The four cases of a single-coordinate step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    /// `g = 0`: the coordinate is optimal.
    Optimal,
    /// `g < 0`: decreasing `α_ij` increases the dual.
    Decrease,
    /// `g > 0` with room under the cap.
    IncreaseFree,
    /// `g > 0` with the cap active; only a pair move can help.
    IncreaseBlocked,
}

/// `g = l − w·x` for a constraint under the current state.
pub fn gradient(state: &DualState, c: &Constraint) -> f64 {
    c.gradient(state.w())
}

pub fn classify(g: f64, alpha_sum: f64, eps: f64) -> Scenario {
    if g.abs() <= eps {
        Scenario::Optimal
    } else if g < 0.0 {
        Scenario::Decrease
    } else if alpha_sum < 1.0 - CAP_SLACK {
        Scenario::IncreaseFree
    } else {
        Scenario::IncreaseBlocked
    }
}

/// Trigger threshold for a coordinate with margin `l`.
pub fn update_threshold(margin: f64) -> f64 {
    1e-12 * (1.0 + margin.abs())
}

/// Closed-form maximization of the dual along `α_idx`, clipped so that
/// `α_idx ≥ 0` and the group sum stays `≤ 1`. Returns the step taken.
pub fn single_update(state: &mut DualState, idx: usize) -> f64 {
    let (g, sqnorm, alpha) = {
        let e = state.set().entry(idx);
        (gradient(state, &e.constraint), e.constraint.sqnorm(), e.alpha)
    };
    let alpha_sum = state.set().group(state.set().group_of(idx)).alpha_sum;
    let lower = -alpha;
    let upper = (1.0 - alpha_sum).max(0.0);
    let step = if sqnorm > 0.0 {
        (g / sqnorm).clamp(lower, upper)
    } else if g > 0.0 {
        // zero vector: the dual is linear in this coordinate
        upper
    } else if g < 0.0 {
        lower
    } else {
        0.0
    };
    if step != 0.0 {
        state.apply_single(idx, step);
    }
    step
}

/// Closed-form maximization along `α_j += a, α_k −= a` for two constraints
/// of the same group. Returns the step taken.
pub fn pair_update(state: &mut DualState, j: usize, k: usize) -> f64 {
    debug_assert_ne!(j, k);
    debug_assert_eq!(state.set().group_of(j), state.set().group_of(k));
    let (ej, ek) = (state.set().entry(j), state.set().entry(k));
    let g_pair = gradient(state, &ej.constraint) - gradient(state, &ek.constraint);
    let curvature = ej.constraint.x.squared_distance(&ek.constraint.x);
    let lo = (-ej.alpha).max(ek.alpha - 1.0);
    let hi = ek.alpha.min(1.0 - ej.alpha);
    let step = if curvature > 0.0 {
        (g_pair / curvature).clamp(lo, hi)
    } else if g_pair > 0.0 {
        // linear along this direction: go to the boundary
        hi
    } else {
        0.0
    };
    if step != 0.0 {
        state.apply_pair(j, k, step);
    }
    step
}

/// Stopping certificate: `lb ≤ OPT ≤ ub`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounds {
    pub lb: f64,
    pub ub: f64,
    /// `½‖w‖²` plus the loss accumulated from in-sweep gradients.
    pub ub_approx: f64,
    pub tol: f64,
    /// True when `ub` was computed before the last change to `α`.
    pub ub_stale: bool,
}

impl Bounds {
    pub fn gap(&self) -> f64 {
        self.ub - self.lb
    }

    pub fn satisfied(&self) -> bool {
        gap_satisfied(self.lb, self.ub, self.tol)
    }
}

/// Relative gap test: `ub − lb ≤ tol · max(1, |ub|)`.
pub fn gap_satisfied(lb: f64, ub: f64, tol: f64) -> bool {
    ub - lb <= tol * ub.abs().max(1.0)
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SweepStats {
    /// Number of steps that changed some `α`.
    pub updates: usize,
    pub pair_updates: usize,
    /// Largest gradient seen during the sweep.
    pub max_violation: f64,
    /// `Σ_i max_j max(0, g_ij)` with gradients taken as they were visited.
    pub loss_accum: f64,
}

/// What happened at one coordinate step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    pub gradient: f64,
    pub scenario: Scenario,
    pub step: f64,
    pub partner: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchConfig {
    /// Relative duality-gap tolerance.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Use the in-sweep upper-bound approximation to decide when to run the
    /// exact upper-bound pass.
    pub approximate_gate: bool,
    /// Allow two-variable moves inside saturated groups.
    pub pair_updates: bool,
    pub seed: u64,
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig {
            tol: 1e-3,
            max_sweeps: 1000,
            approximate_gate: true,
            pair_updates: true,
            seed: 0,
        }
    }
}

impl BatchConfig {
    pub fn with_tol(tol: f64) -> Self {
        BatchConfig {
            tol,
            ..BatchConfig::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchOutcome {
    pub bounds: Bounds,
    pub sweeps: usize,
    pub converged: bool,
    /// Exact upper-bound passes performed.
    pub ub_evaluations: usize,
    pub updates: usize,
}

/// Randomized dual coordinate solver. Owns its random stream so repeated
/// hot-started calls continue one reproducible sequence.
#[derive(Clone, Debug)]
pub struct BatchSolver {
    config: BatchConfig,
    rng: ChaCha8Rng,
    order: Vec<usize>,
    group_loss: Vec<f64>,
    partners: Vec<usize>,
}

impl BatchSolver {
    pub fn new(config: BatchConfig) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        BatchSolver {
            config,
            rng,
            order: Vec::new(),
            group_loss: Vec::new(),
            partners: Vec::new(),
        }
    }

    pub fn config(&self) -> &BatchConfig {
        &self.config
    }

    pub fn set_tol(&mut self, tol: f64) {
        self.config.tol = tol;
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// One coordinate step on entry `idx`.
    pub fn step(&mut self, state: &mut DualState, idx: usize) -> StepOutcome {
        let entry = state.set().entry(idx);
        let g = gradient(state, &entry.constraint);
        let gpos = state.set().group_of(idx);
        let alpha_sum = state.set().group(gpos).alpha_sum;
        let scenario = classify(g, alpha_sum, update_threshold(entry.constraint.margin));
        let mut outcome = StepOutcome {
            gradient: g,
            scenario,
            step: 0.0,
            partner: None,
        };
        match scenario {
            Scenario::Optimal => {}
            Scenario::Decrease | Scenario::IncreaseFree => {
                outcome.step = single_update(state, idx);
            }
            Scenario::IncreaseBlocked if self.config.pair_updates => {
                self.partners.clear();
                self.partners.extend(
                    state
                        .set()
                        .group(gpos)
                        .members()
                        .iter()
                        .copied()
                        .filter(|&k| k != idx && state.set().entry(k).alpha > 0.0),
                );
                if !self.partners.is_empty() {
                    let k = self.partners[self.rng.gen_range(0..self.partners.len())];
                    outcome.partner = Some(k);
                    outcome.step = pair_update(state, idx, k);
                }
            }
            Scenario::IncreaseBlocked => {}
        }
        outcome
    }

    /// One pass over every cached constraint in random order.
    pub fn sweep(&mut self, state: &mut DualState) -> SweepStats {
        let n = state.len();
        self.order.clear();
        self.order.extend(0..n);
        self.order.shuffle(&mut self.rng);
        self.group_loss.clear();
        self.group_loss.resize(state.set().groups().len(), 0.0);

        let mut stats = SweepStats {
            max_violation: f64::NEG_INFINITY,
            ..SweepStats::default()
        };
        let order = std::mem::take(&mut self.order);
        for &idx in &order {
            let out = self.step(state, idx);
            let gpos = state.set().group_of(idx);
            let slot = &mut self.group_loss[gpos];
            *slot = slot.max(out.gradient);
            stats.max_violation = stats.max_violation.max(out.gradient);
            if out.step != 0.0 {
                stats.updates += 1;
                if out.partner.is_some() {
                    stats.pair_updates += 1;
                }
            }
        }
        self.order = order;
        if n == 0 {
            stats.max_violation = 0.0;
        }
        stats.loss_accum = self.group_loss.iter().sum();
        stats
    }

    /// Sweeps until the relative duality gap is within tolerance or the
    /// sweep cap is reached. Starts from whatever `α` the state holds.
    pub fn optimize(&mut self, state: &mut DualState) -> BatchOutcome {
        let tol = self.config.tol;
        let mut outcome = BatchOutcome {
            bounds: Bounds {
                lb: eval_dual(state),
                ub: f64::INFINITY,
                ub_approx: f64::INFINITY,
                tol,
                ub_stale: true,
            },
            sweeps: 0,
            converged: false,
            ub_evaluations: 0,
            updates: 0,
        };
        while outcome.sweeps < self.config.max_sweeps {
            let stats = self.sweep(state);
            outcome.sweeps += 1;
            outcome.updates += stats.updates;
            let half_norm = 0.5 * dense_squared_norm(state.w());
            let b = &mut outcome.bounds;
            b.lb = -half_norm + state.l_alpha();
            b.ub_approx = half_norm + stats.loss_accum;
            b.ub_stale = true;
            let check = !self.config.approximate_gate || gap_satisfied(b.lb, b.ub_approx, tol);
            if check {
                b.ub = state.primal().objective;
                b.ub_stale = false;
                outcome.ub_evaluations += 1;
                if gap_satisfied(b.lb, b.ub, tol) {
                    outcome.converged = true;
                    break;
                }
            }
        }
        if outcome.bounds.ub_stale {
            outcome.bounds.ub = state.primal().objective;
            outcome.bounds.ub_stale = false;
            outcome.ub_evaluations += 1;
        }
        outcome
    }
}

/// Result of a one-shot batch solve.
#[derive(Clone, Debug)]
pub struct Solution {
    pub state: DualState,
    pub outcome: BatchOutcome,
}

impl Solution {
    pub fn w(&self) -> &[f64] {
        self.state.w()
    }

    pub fn lb(&self) -> f64 {
        self.outcome.bounds.lb
    }

    pub fn ub(&self) -> f64 {
        self.outcome.bounds.ub
    }
}

/// Solves the QP over `constraints` from zero (or from `warm_alpha`, given
/// in the same order as `constraints`).
pub fn optimize(
    dim: usize,
    constraints: &[Constraint],
    warm_alpha: Option<&[f64]>,
    config: BatchConfig,
) -> Result<Solution> {
    let mut state = match warm_alpha {
        Some(alpha) => {
            if alpha.len() != constraints.len() {
                return Err(crate::error::SvmError::Config(format!(
                    "warm start has {} values for {} constraints",
                    alpha.len(),
                    constraints.len()
                )));
            }
            DualState::with_alpha(dim, constraints.iter().cloned().zip(alpha.iter().copied()))?
        }
        None => DualState::from_constraints(dim, constraints.iter().cloned())?,
    };
    let outcome = BatchSolver::new(config).optimize(&mut state);
    Ok(Solution { state, outcome })
}
