#![allow(dead_code)]

use dualsvm::online::FiniteGroup;
use dualsvm::reductions::{Label, LabeledExample, Reduction};
use dualsvm::{Constraint, SparseVec};
use rand::Rng;

/// Random shared-slack instance: up to 5 groups, up to 4 constraints per
/// group, dimension up to 6, margins in [-2, 2], entries in [-1, 1].
pub fn random_instance(rng: &mut impl Rng) -> (usize, Vec<Constraint>) {
    let dim = rng.gen_range(1..=6);
    let groups = rng.gen_range(1..=5);
    let mut out = Vec::new();
    for g in 0..groups {
        for j in 0..rng.gen_range(1..=4) {
            out.push(Constraint::new(g as u64, j as u64, random_sparse(rng, dim, 0.75), rng.gen_range(-2.0..2.0)).unwrap());
        }
    }
    (dim, out)
}

pub fn random_sparse(rng: &mut impl Rng, dim: usize, density: f64) -> SparseVec {
    let mut pairs = Vec::new();
    for k in 0..dim {
        if rng.gen_bool(density) {
            pairs.push((k, rng.gen_range(-1.0..1.0)));
        }
    }
    SparseVec::new(pairs).unwrap()
}

pub fn random_dense(rng: &mut impl Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-scale..scale)).collect()
}

fn dense_dot(x: &SparseVec, w: &[f64]) -> f64 {
    x.entries().iter().map(|&(k, v)| v * w[k]).sum()
}

/// Binary examples labeled by a random hyperplane through the origin.
/// With `separable`, points closer than `margin` to the plane are
/// redrawn; otherwise 10% of labels are flipped.
pub fn binary_dataset(rng: &mut impl Rng, n: usize, dim: usize, separable: bool, margin: f64) -> Vec<LabeledExample> {
    let truth = random_dense(rng, dim, 1.0);
    let norm = truth.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x = random_sparse(rng, dim, 0.6);
        let s = dense_dot(&x, &truth) / norm;
        if separable && s.abs() < margin {
            continue;
        }
        let mut y = s > 0.0;
        if !separable && rng.gen_bool(0.1) {
            y = !y;
        }
        out.push(LabeledExample::new(x, Label::Binary(y)));
    }
    out
}

/// Multiclass examples around `classes` random centers.
pub fn multiclass_dataset(rng: &mut impl Rng, n: usize, dim: usize, classes: usize, noise: f64) -> Vec<LabeledExample> {
    let centers: Vec<Vec<f64>> = (0..classes).map(|_| random_dense(rng, dim, 1.0)).collect();
    (0..n)
        .map(|_| {
            let y = rng.gen_range(0..classes);
            let x = SparseVec::new(
                centers[y]
                    .iter()
                    .enumerate()
                    .map(|(k, c)| (k, c + rng.gen_range(-noise..noise))),
            )
            .unwrap();
            LabeledExample::new(x, Label::Class(y + 1))
        })
        .collect()
}

pub fn reduce_all(reduction: &Reduction, examples: &[LabeledExample]) -> Vec<FiniteGroup> {
    examples
        .iter()
        .enumerate()
        .flat_map(|(i, ex)| reduction.reduce(i as u64, ex).unwrap())
        .collect()
}

pub fn flatten(groups: &[FiniteGroup]) -> Vec<Constraint> {
    groups.iter().flat_map(|g| g.constraints().iter().cloned()).collect()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
