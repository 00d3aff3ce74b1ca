//! Dual coordinate solvers for linear SVMs with shared slack variables.
//!
//! The problem solved everywhere in this crate is
//!
//! ```text
//! min_w  ½‖w‖² + Σ_i max_j max(0, l_ij − w·x_ij)
//! ```
//!
//! where the constraints `j` of one example `i` share a single slack. Binary,
//! multiclass, structural, latent, and regression SVMs all reduce to this
//! form (see [`reductions`]).
//!
//! - [`batch`]: randomized dual coordinate ascent on an in-memory set, with
//!   duality-gap stopping.
//! - [`online`]: out-of-core learning that caches likely support vectors and
//!   schedules exploration against optimization by the tracked gap.
//! - [`extensions`]: non-negative weights and diagonal Gaussian priors.
//! - [`refsolver`]: slow projected-gradient reference solvers for checking.

pub mod batch;
pub mod cli;
pub mod error;
pub mod extensions;
pub mod io;
pub mod online;
pub mod problem;
pub mod reductions;
pub mod refsolver;
pub mod sparse;

pub use batch::{BatchConfig, BatchOutcome, BatchSolver, Bounds, Scenario};
pub use error::{Result, SvmError};
pub use online::{ExampleSource, FiniteGroup, OnlineConfig, OnlineLearner, SlackGroup};
pub use problem::{eval_dual, eval_primal, Constraint, DualState, GroupId, PrimalEvaluation};
pub use sparse::SparseVec;
