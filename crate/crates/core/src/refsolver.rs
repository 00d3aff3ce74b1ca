//! Slow, independent reference solvers.
//!
//! These work on an explicit dense Gram matrix (or explicit primal-dual
//! vectors) with plain projected gradient ascent, sharing no code with the
//! coordinate solvers beyond the constraint container. They are meant for
//! tiny problems in tests.

use std::collections::HashMap;

use crate::error::{Result, SvmError};
use crate::problem::Constraint;

/// The dual QP `max −½αᵀQα + lᵀα` over per-group capped simplices.
#[derive(Clone, Debug)]
pub struct DenseQP {
    n: usize,
    gram: Vec<f64>,
    margins: Vec<f64>,
    groups: Vec<Vec<usize>>,
}

impl DenseQP {
    /// `groups[i]` is the dense group index of variable `i`.
    pub fn new(gram: Vec<f64>, margins: Vec<f64>, groups: &[usize]) -> Result<Self> {
        let n = margins.len();
        if gram.len() != n * n || groups.len() != n {
            return Err(SvmError::Config("dense QP shapes disagree".into()));
        }
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (gram[i * n + j], gram[j * n + i]);
                if (a - b).abs() > 1e-10 * (1.0 + a.abs().max(b.abs())) {
                    return Err(SvmError::Config(format!("gram not symmetric at ({i}, {j})")));
                }
            }
        }
        let n_groups = groups.iter().map(|&g| g + 1).max().unwrap_or(0);
        let mut members = vec![Vec::new(); n_groups];
        for (i, &g) in groups.iter().enumerate() {
            members[g].push(i);
        }
        members.retain(|m| !m.is_empty());
        Ok(DenseQP {
            n,
            gram,
            margins,
            groups: members,
        })
    }

    pub fn from_constraints(constraints: &[Constraint]) -> Self {
        Self::weighted(constraints, None, None)
    }

    /// Gram under the metric `diag(metric)` and margins shifted by
    /// `−shift·x`. This is the dual of `½‖(w − shift)R‖² + loss` with
    /// `metric = R⁻²`.
    pub fn weighted(constraints: &[Constraint], metric: Option<&[f64]>, shift: Option<&[f64]>) -> Self {
        let n = constraints.len();
        let weight = |k: usize| metric.map_or(1.0, |m| m[k]);
        let mut gram = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let (a, b) = (constraints[i].x.entries(), constraints[j].x.entries());
                let (mut p, mut q, mut acc) = (0, 0, 0.0);
                while p < a.len() && q < b.len() {
                    match a[p].0.cmp(&b[q].0) {
                        std::cmp::Ordering::Less => p += 1,
                        std::cmp::Ordering::Greater => q += 1,
                        std::cmp::Ordering::Equal => {
                            acc += a[p].1 * b[q].1 * weight(a[p].0);
                            p += 1;
                            q += 1;
                        }
                    }
                }
                gram[i * n + j] = acc;
                gram[j * n + i] = acc;
            }
        }
        let margins = constraints
            .iter()
            .map(|c| {
                c.margin - shift.map_or(0.0, |s| c.x.entries().iter().map(|&(k, v)| v * s[k]).sum::<f64>())
            })
            .collect();
        let mut ids: HashMap<u64, usize> = HashMap::new();
        let groups: Vec<usize> = constraints
            .iter()
            .map(|c| {
                let next = ids.len();
                *ids.entry(c.group).or_insert(next)
            })
            .collect();
        DenseQP::new(gram, margins, &groups).expect("constructed symmetric")
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn gram(&self, i: usize, j: usize) -> f64 {
        self.gram[i * self.n + j]
    }

    pub fn margins(&self) -> &[f64] {
        &self.margins
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn value(&self, alpha: &[f64]) -> f64 {
        let mut quad = 0.0;
        for i in 0..self.n {
            if alpha[i] == 0.0 {
                continue;
            }
            let row = &self.gram[i * self.n..(i + 1) * self.n];
            quad += alpha[i] * row.iter().zip(alpha).map(|(q, a)| q * a).sum::<f64>();
        }
        -0.5 * quad + self.margins.iter().zip(alpha).map(|(l, a)| l * a).sum::<f64>()
    }

    pub fn gradient(&self, alpha: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let row = &self.gram[i * self.n..(i + 1) * self.n];
                self.margins[i] - row.iter().zip(alpha).map(|(q, a)| q * a).sum::<f64>()
            })
            .collect()
    }

    /// Projects every group block onto its capped simplex.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        let mut block = Vec::new();
        for members in &self.groups {
            block.clear();
            block.extend(members.iter().map(|&i| v[i]));
            for (&i, p) in members.iter().zip(project_group_cap(&block)) {
                out[i] = p;
            }
        }
        out
    }

    pub fn is_feasible(&self, alpha: &[f64], tol: f64) -> bool {
        alpha.iter().all(|&a| a >= -tol)
            && self
                .groups
                .iter()
                .all(|m| m.iter().map(|&i| alpha[i]).sum::<f64>() <= 1.0 + tol)
    }
}

/// Euclidean projection onto `{p ≥ 0, Σp ≤ 1}`.
pub fn project_group_cap(v: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = v.iter().map(|&x| x.max(0.0)).collect();
    if clipped.iter().sum::<f64>() <= 1.0 {
        return clipped;
    }
    // onto the simplex Σp = 1: p = max(v − τ, 0)
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite input"));
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (k, &s) in sorted.iter().enumerate() {
        cumulative += s;
        let t = (cumulative - 1.0) / (k + 1) as f64;
        if s - t > 0.0 {
            tau = t;
        } else {
            break;
        }
    }
    v.iter().map(|&x| (x - tau).max(0.0)).collect()
}

#[derive(Clone, Debug)]
pub struct RefSolution {
    pub alpha: Vec<f64>,
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Norm of the projected-gradient step at termination.
    pub residual: f64,
}

/// Residual below which the projected gradient counts as zero.
pub const REF_RESIDUAL_TOL: f64 = 1e-9;

/// Projected gradient ascent from `α = 0`.
///
/// The step starts at `1/trace(Q)`, a Lipschitz bound for the gradient, and
/// is halved whenever a step fails to improve the objective.
pub fn solve_reference(qp: &DenseQP, iters: usize) -> RefSolution {
    let n = qp.len();
    let trace: f64 = (0..n).map(|i| qp.gram(i, i)).sum();
    let mut step = 1.0 / trace.max(1e-12);
    let mut alpha = vec![0.0; n];
    let mut value = 0.0;
    let mut residual = f64::INFINITY;
    let mut it = 0;
    while it < iters {
        it += 1;
        let grad = qp.gradient(&alpha);
        let trial: Vec<f64> = alpha.iter().zip(&grad).map(|(a, g)| a + step * g).collect();
        let next = qp.project(&trial);
        residual = next
            .iter()
            .zip(&alpha)
            .map(|(p, a)| (p - a) * (p - a))
            .sum::<f64>()
            .sqrt()
            / step;
        let next_value = qp.value(&next);
        if residual <= REF_RESIDUAL_TOL {
            // a huge step (near-zero Gram) can make the residual tiny on a real move
            if next_value > value {
                alpha = next;
            }
            break;
        }
        if next_value < value {
            step *= 0.5;
            continue;
        }
        alpha = next;
        value = next_value;
    }
    RefSolution {
        value: qp.value(&alpha),
        alpha,
        converged: residual <= REF_RESIDUAL_TOL,
        iterations: it,
        residual,
    }
}

/// Reference solution for the problem with `w_k ≥ 0` on masked coordinates.
#[derive(Clone, Debug)]
pub struct NonNegReference {
    pub w: Vec<f64>,
    pub dual: f64,
    pub primal: f64,
    pub converged: bool,
}

/// Projected gradient ascent on the joint dual in `(α, β)`:
/// `max −½‖Σα_ij x_ij + β‖² + Σ l_ij α_ij`, `β ≥ 0` on masked coordinates.
pub fn solve_nonneg_reference(
    constraints: &[Constraint],
    dim: usize,
    mask: &[bool],
    iters: usize,
) -> NonNegReference {
    let n = constraints.len();
    let xs: Vec<Vec<f64>> = constraints
        .iter()
        .map(|c| c.x.to_dense(dim).expect("constraint within dim"))
        .collect();
    let qp = DenseQP::from_constraints(constraints);
    let combine = |alpha: &[f64], beta: &[f64]| -> Vec<f64> {
        let mut w = beta.to_vec();
        for (x, &a) in xs.iter().zip(alpha) {
            for k in 0..dim {
                w[k] += a * x[k];
            }
        }
        w
    };
    let dual = |alpha: &[f64], w: &[f64]| -> f64 {
        -0.5 * w.iter().map(|v| v * v).sum::<f64>()
            + constraints.iter().zip(alpha).map(|(c, a)| c.margin * a).sum::<f64>()
    };
    let lipschitz: f64 =
        xs.iter().map(|x| x.iter().map(|v| v * v).sum::<f64>()).sum::<f64>() + mask.iter().filter(|&&m| m).count() as f64;
    let mut step = 1.0 / lipschitz.max(1e-12);
    let mut alpha = vec![0.0; n];
    let mut beta = vec![0.0; dim];
    let mut w = combine(&alpha, &beta);
    let mut value = dual(&alpha, &w);
    let mut converged = false;
    let mut it = 0;
    while it < iters {
        it += 1;
        let ga: Vec<f64> = constraints
            .iter()
            .zip(&xs)
            .map(|(c, x)| c.margin - x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        let trial: Vec<f64> = alpha.iter().zip(&ga).map(|(a, g)| a + step * g).collect();
        let next_alpha = qp.project(&trial);
        let next_beta: Vec<f64> = (0..dim)
            .map(|k| if mask[k] { (beta[k] - step * w[k]).max(0.0) } else { 0.0 })
            .collect();
        let moved: f64 = next_alpha
            .iter()
            .zip(&alpha)
            .chain(next_beta.iter().zip(&beta))
            .map(|(p, a)| (p - a) * (p - a))
            .sum::<f64>()
            .sqrt()
            / step;
        let next_w = combine(&next_alpha, &next_beta);
        let next_value = dual(&next_alpha, &next_w);
        if moved <= REF_RESIDUAL_TOL {
            if next_value > value {
                w = next_w;
                value = next_value;
            }
            converged = true;
            break;
        }
        if next_value < value {
            step *= 0.5;
            continue;
        }
        alpha = next_alpha;
        beta = next_beta;
        w = next_w;
        value = next_value;
    }
    let feasible: Vec<f64> = w
        .iter()
        .zip(mask)
        .map(|(&v, &m)| if m { v.max(0.0) } else { v })
        .collect();
    let primal = primal_objective(&feasible, constraints, None, None);
    NonNegReference {
        w: feasible,
        dual: value,
        primal,
        converged,
    }
}

/// `½‖(w − w0)R‖² + Σ_i max_j max(0, l_ij − w·x_ij)` with diagonal `R`,
/// evaluated densely. With no prior this is the plain primal objective.
pub fn primal_objective(
    w: &[f64],
    constraints: &[Constraint],
    w0: Option<&[f64]>,
    r_diag: Option<&[f64]>,
) -> f64 {
    let reg: f64 = w
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let d = (v - w0.map_or(0.0, |m| m[k])) * r_diag.map_or(1.0, |r| r[k]);
            d * d
        })
        .sum();
    let mut slack: HashMap<u64, f64> = HashMap::new();
    for c in constraints {
        let score: f64 = c.x.entries().iter().map(|&(k, v)| v * w[k]).sum();
        let s = slack.entry(c.group).or_insert(0.0);
        *s = s.max(c.margin - score);
    }
    0.5 * reg + slack.values().sum::<f64>()
}

/// Reference solution of the prior-regularized primal
/// `½‖(w − w0)R‖² + loss`, solved through its own dual with the metric
/// `R⁻²`, and reported in original coordinates.
#[derive(Clone, Debug)]
pub struct PriorReference {
    pub w: Vec<f64>,
    pub dual: f64,
    pub primal: f64,
    pub converged: bool,
}

pub fn solve_prior_reference(
    constraints: &[Constraint],
    w0: &[f64],
    r_diag: &[f64],
    iters: usize,
) -> PriorReference {
    let metric: Vec<f64> = r_diag.iter().map(|r| 1.0 / (r * r)).collect();
    let qp = DenseQP::weighted(constraints, Some(&metric), Some(w0));
    let sol = solve_reference(&qp, iters);
    let mut w = w0.to_vec();
    for (c, &a) in constraints.iter().zip(&sol.alpha) {
        for &(k, v) in c.x.entries() {
            w[k] += a * v * metric[k];
        }
    }
    let primal = primal_objective(&w, constraints, Some(w0), Some(r_diag));
    PriorReference {
        w,
        dual: sol.value,
        primal,
        converged: sol.converged,
    }
}
