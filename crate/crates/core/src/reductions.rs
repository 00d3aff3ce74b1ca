//! Builders mapping standard SVM problem families onto shared-slack
//! constraint groups.
//!
//! | family              | group per example | constraints                                  |
//! |---------------------|-------------------|----------------------------------------------|
//! | binary              | 1                 | `(C·y·x, C·y·v)`, margin `C`                 |
//! | multiclass          | 1                 | `φ(x,y) − φ(x,j)` for `j ≠ y`, margin `loss` |
//! | structural          | 1, oracle-backed  | `φ(x,y) − φ(x,h)`, margin `loss(y,h)`        |
//! | latent              | 1                 | positives `φ(x,z)`; negatives `−φ(x,g)`      |
//! | latent structural   | 1, oracle-backed  | over `h ∈ Y`, `g ∈ Z`                        |
//! | regression          | 2                 | `(x, y − ε)` and `(−x, −y − ε)`              |
//!
//! Finite families produce [`FiniteGroup`]s; search-based families produce
//! groups whose worst offender comes from loss-augmented inference.

use std::fmt::Debug;
use std::sync::Arc;

use crate::error::{Result, SvmError};
use crate::online::{FiniteGroup, Offender, SlackGroup};
use crate::problem::{Constraint, GroupId};
use crate::sparse::SparseVec;

/// Label of a flat (non-structured) example.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Label {
    /// `true` for `+1`.
    Binary(bool),
    /// Class index in `1..=K`.
    Class(usize),
    Real(f64),
}

impl Label {
    pub fn sign(&self) -> Option<f64> {
        match *self {
            Label::Binary(true) => Some(1.0),
            Label::Binary(false) => Some(-1.0),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledExample {
    pub features: SparseVec,
    pub label: Label,
    /// Latent assignment, required for positives of latent families.
    pub latent: Option<usize>,
    /// Per-example cost `C_i` (slack rescaling).
    pub cost: Option<f64>,
    /// Per-example margin (margin rescaling).
    pub margin: Option<f64>,
}

impl LabeledExample {
    pub fn new(features: SparseVec, label: Label) -> Self {
        LabeledExample {
            features,
            label,
            latent: None,
            cost: None,
            margin: None,
        }
    }
}

fn check_cost(c: f64) -> Result<()> {
    if c.is_finite() && c > 0.0 {
        Ok(())
    } else {
        Err(SvmError::Config(format!("cost must be positive and finite, found {c}")))
    }
}

/// Appends the constant bias feature `v` at index `features`.
pub fn with_bias(x: &SparseVec, features: usize, v: f64) -> Result<SparseVec> {
    x.check_dim(features)?;
    if v == 0.0 {
        return Ok(x.clone());
    }
    x.with_appended(features, v)
}

/// One constraint `(C_i·y·(x, v), C_i·margin_i)` for a ±1 example.
///
/// `features` is the input dimension; the bias lands at that index.
pub fn reduce_binary(group: GroupId, ex: &LabeledExample, c: f64, v: f64, features: usize) -> Result<Constraint> {
    let y = ex
        .label
        .sign()
        .ok_or_else(|| SvmError::Config(format!("binary reduction needs a ±1 label, got {:?}", ex.label)))?;
    let cost = ex.cost.unwrap_or(c);
    check_cost(cost)?;
    let x = with_bias(&ex.features, features, v)?.scale(cost * y);
    Constraint::new(group, 0, x, cost * ex.margin.unwrap_or(1.0))
}

/// `φ(x, j)`: `x` placed in block `j` (1-based) of a `K·n` vector.
pub fn class_block(x: &SparseVec, class: usize, block: usize) -> SparseVec {
    x.shifted((class - 1) * block)
}

/// `K − 1` constraints `φ(x,y) − φ(x,j)` with margins `loss(y, j)`, scaled
/// by `scale`. `block` is the per-class weight length.
pub fn reduce_multiclass(
    group: GroupId,
    ex: &LabeledExample,
    classes: usize,
    block: usize,
    scale: f64,
    loss: &dyn Fn(usize, usize) -> f64,
) -> Result<Vec<Constraint>> {
    if classes < 2 {
        return Err(SvmError::Config(format!("multiclass needs K ≥ 2, got {classes}")));
    }
    let y = match ex.label {
        Label::Class(y) if (1..=classes).contains(&y) => y,
        other => {
            return Err(SvmError::Config(format!(
                "multiclass label must be in 1..={classes}, got {other:?}"
            )))
        }
    };
    let scale = ex.cost.unwrap_or(scale);
    check_cost(scale)?;
    ex.features.check_dim(block)?;
    let truth = class_block(&ex.features, y, block);
    (1..=classes)
        .filter(|&j| j != y)
        .map(|j| {
            let x = truth.sub(&class_block(&ex.features, j, block)).scale(scale);
            Constraint::new(group, j as u64, x, scale * loss(y, j))
        })
        .collect()
}

/// 0-1 loss between classes.
pub fn zero_one_loss(y: usize, j: usize) -> f64 {
    if y == j {
        0.0
    } else {
        1.0
    }
}

/// Two singleton groups `(x, y − ε)` and `(−x, −y − ε)`, ids `2i` and `2i+1`.
pub fn reduce_regression(index: u64, ex: &LabeledExample, epsilon: f64, scale: f64) -> Result<[Constraint; 2]> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(SvmError::Config(format!("epsilon must be non-negative, got {epsilon}")));
    }
    let y = match ex.label {
        Label::Real(y) => y,
        other => return Err(SvmError::Config(format!("regression needs a real target, got {other:?}"))),
    };
    let scale = ex.cost.unwrap_or(scale);
    check_cost(scale)?;
    let x = ex.features.scale(scale);
    Ok([
        Constraint::new(2 * index, 0, x.clone(), scale * (y - epsilon))?,
        Constraint::new(2 * index + 1, 0, x.scale(-1.0), scale * (-y - epsilon))?,
    ])
}

/// A joint feature map for structured outputs.
pub trait FeatureMap {
    type Input;
    type Label: Clone + PartialEq + Debug;

    fn dim(&self) -> usize;

    fn phi(&self, x: &Self::Input, y: &Self::Label) -> SparseVec;

    /// `loss(truth, y) ≥ 0` with `loss(y, y) = 0`.
    fn loss(&self, truth: &Self::Label, y: &Self::Label) -> f64;

    /// Every label in the output space, for exhaustive search and checks.
    fn labels(&self, x: &Self::Input) -> Vec<Self::Label>;

    /// Stable local index of a label; ties in inference go to the smallest.
    fn label_index(&self, y: &Self::Label) -> u64;

    /// `argmax_h loss(truth, h) + w·φ(x, h)`. Defaults to enumeration.
    fn loss_augmented(&self, x: &Self::Input, truth: &Self::Label, w: &[f64]) -> Result<Self::Label> {
        exhaustive_loss_augmented(self, x, truth, w)
    }

    /// `argmax_h w·φ(x, h)`, the test-time predictor.
    fn predict(&self, x: &Self::Input, w: &[f64]) -> Result<Self::Label> {
        let mut best: Option<(f64, u64, Self::Label)> = None;
        for h in self.labels(x) {
            let s = self.phi(x, &h).dot(w)?;
            let idx = self.label_index(&h);
            if best.as_ref().is_none_or(|(bs, bi, _)| s > *bs || (s == *bs && idx < *bi)) {
                best = Some((s, idx, h));
            }
        }
        best.map(|b| b.2)
            .ok_or_else(|| SvmError::Oracle("empty label space".into()))
    }
}

/// Enumerates the label space; ties go to the smallest label index.
pub fn exhaustive_loss_augmented<M: FeatureMap + ?Sized>(
    map: &M,
    x: &M::Input,
    truth: &M::Label,
    w: &[f64],
) -> Result<M::Label> {
    let mut best: Option<(f64, u64, M::Label)> = None;
    for h in map.labels(x) {
        let s = map.loss(truth, &h) + map.phi(x, &h).dot(w)?;
        let idx = map.label_index(&h);
        if best.as_ref().is_none_or(|(bs, bi, _)| s > *bs || (s == *bs && idx < *bi)) {
            best = Some((s, idx, h));
        }
    }
    best.map(|b| b.2)
        .ok_or_else(|| SvmError::Oracle("empty label space".into()))
}

/// One structured example; its worst offender comes from loss-augmented
/// inference on the feature map.
pub struct StructuredGroup<M: FeatureMap> {
    id: GroupId,
    input: M::Input,
    truth: M::Label,
    map: Arc<M>,
}

impl<M: FeatureMap> Clone for StructuredGroup<M>
where
    M::Input: Clone,
{
    fn clone(&self) -> Self {
        StructuredGroup {
            id: self.id,
            input: self.input.clone(),
            truth: self.truth.clone(),
            map: Arc::clone(&self.map),
        }
    }
}

impl<M: FeatureMap> StructuredGroup<M> {
    pub fn truth(&self) -> &M::Label {
        &self.truth
    }

    pub fn input(&self) -> &M::Input {
        &self.input
    }

    /// The constraint `φ(x,y) − φ(x,h)` with margin `loss(y,h)`.
    pub fn constraint_for(&self, h: &M::Label) -> Result<Constraint> {
        let x = self
            .map
            .phi(&self.input, &self.truth)
            .sub(&self.map.phi(&self.input, h));
        Constraint::new(self.id, self.map.label_index(h), x, self.map.loss(&self.truth, h))
    }
}

impl<M: FeatureMap> SlackGroup for StructuredGroup<M> {
    fn id(&self) -> GroupId {
        self.id
    }

    fn worst_offender(&self, w: &[f64]) -> Result<Option<Offender>> {
        let h = self.map.loss_augmented(&self.input, &self.truth, w)?;
        let constraint = self.constraint_for(&h)?;
        let gradient = constraint.margin - constraint.x.dot(w)?;
        Ok(Some(Offender { constraint, gradient }))
    }

    fn candidates(&self) -> Option<Vec<Constraint>> {
        self.map
            .labels(&self.input)
            .iter()
            .filter(|h| **h != self.truth)
            .map(|h| self.constraint_for(h))
            .collect::<Result<Vec<_>>>()
            .ok()
    }
}

/// Structural example over the output space of `map`.
pub fn reduce_structural<M: FeatureMap>(
    group: GroupId,
    input: M::Input,
    truth: M::Label,
    map: Arc<M>,
) -> StructuredGroup<M> {
    StructuredGroup {
        id: group,
        input,
        truth,
        map,
    }
}

/// Feature map over a latent space, for latent SVMs.
pub trait LatentMap {
    type Input;

    fn dim(&self) -> usize;

    fn phi(&self, x: &Self::Input, z: usize) -> SparseVec;

    fn latent_count(&self, x: &Self::Input) -> usize;

    /// `argmax_z w·φ(x, z)`, ties to the smallest `z`.
    fn best_latent(&self, x: &Self::Input, w: &[f64]) -> Result<usize> {
        let mut best: Option<(f64, usize)> = None;
        for z in 0..self.latent_count(x) {
            let s = self.phi(x, z).dot(w)?;
            if best.is_none_or(|(bs, _)| s > bs) {
                best = Some((s, z));
            }
        }
        best.map(|b| b.1)
            .ok_or_else(|| SvmError::Oracle("empty latent space".into()))
    }
}

/// A negative latent example: constraints `−φ(x, g)` with margin `1` for
/// every `g ∈ Z`, so the slack covers `1 + max_g w·φ(x, g)`.
pub struct LatentNegativeGroup<M: LatentMap> {
    id: GroupId,
    input: M::Input,
    map: Arc<M>,
}

impl<M: LatentMap> Clone for LatentNegativeGroup<M>
where
    M::Input: Clone,
{
    fn clone(&self) -> Self {
        LatentNegativeGroup {
            id: self.id,
            input: self.input.clone(),
            map: Arc::clone(&self.map),
        }
    }
}

impl<M: LatentMap> LatentNegativeGroup<M> {
    fn constraint_for(&self, z: usize) -> Result<Constraint> {
        Constraint::new(self.id, z as u64, self.map.phi(&self.input, z).scale(-1.0), 1.0)
    }
}

impl<M: LatentMap> SlackGroup for LatentNegativeGroup<M> {
    fn id(&self) -> GroupId {
        self.id
    }

    fn worst_offender(&self, w: &[f64]) -> Result<Option<Offender>> {
        if self.map.latent_count(&self.input) == 0 {
            return Ok(None);
        }
        let z = self.map.best_latent(&self.input, w)?;
        let constraint = self.constraint_for(z)?;
        let gradient = constraint.margin - constraint.x.dot(w)?;
        Ok(Some(Offender { constraint, gradient }))
    }

    fn candidates(&self) -> Option<Vec<Constraint>> {
        (0..self.map.latent_count(&self.input))
            .map(|z| self.constraint_for(z))
            .collect::<Result<Vec<_>>>()
            .ok()
    }
}

/// Groups of a latent SVM's convex stage.
pub enum LatentGroup<M: LatentMap> {
    Positive(FiniteGroup),
    Negative(LatentNegativeGroup<M>),
}

impl<M: LatentMap> Clone for LatentGroup<M>
where
    M::Input: Clone,
{
    fn clone(&self) -> Self {
        match self {
            LatentGroup::Positive(g) => LatentGroup::Positive(g.clone()),
            LatentGroup::Negative(g) => LatentGroup::Negative(g.clone()),
        }
    }
}

impl<M: LatentMap> SlackGroup for LatentGroup<M> {
    fn id(&self) -> GroupId {
        match self {
            LatentGroup::Positive(g) => g.id(),
            LatentGroup::Negative(g) => g.id(),
        }
    }

    fn worst_offender(&self, w: &[f64]) -> Result<Option<Offender>> {
        match self {
            LatentGroup::Positive(g) => g.worst_offender(w),
            LatentGroup::Negative(g) => g.worst_offender(w),
        }
    }

    fn candidates(&self) -> Option<Vec<Constraint>> {
        match self {
            LatentGroup::Positive(g) => g.candidates(),
            LatentGroup::Negative(g) => g.candidates(),
        }
    }
}

/// Positive with imputed latent `z` → `(φ(x,z), 1)`; negative → all of
/// `Z` through the max-scoring latent.
pub fn reduce_latent<M: LatentMap>(
    group: GroupId,
    input: M::Input,
    positive: bool,
    latent: Option<usize>,
    map: Arc<M>,
) -> Result<LatentGroup<M>> {
    if positive {
        let z = latent.ok_or_else(|| {
            SvmError::Config(format!("positive example {group} has no latent assignment"))
        })?;
        let c = Constraint::new(group, 0, map.phi(&input, z), 1.0)?;
        Ok(LatentGroup::Positive(FiniteGroup::new(group, vec![c])))
    } else {
        Ok(LatentGroup::Negative(LatentNegativeGroup { id: group, input, map }))
    }
}

/// Feature map for latent structural SVMs: `φ(x, y, z)` and
/// `loss(y_true, y, z)`.
pub trait LatentStructuredMap {
    type Input;
    type Label: Clone + PartialEq + Debug;

    fn dim(&self) -> usize;
    fn phi(&self, x: &Self::Input, y: &Self::Label, z: usize) -> SparseVec;
    fn loss(&self, truth: &Self::Label, y: &Self::Label, z: usize) -> f64;
    fn labels(&self, x: &Self::Input) -> Vec<Self::Label>;
    fn latent_count(&self, x: &Self::Input) -> usize;
    fn label_index(&self, y: &Self::Label) -> u64;
}

/// Views a latent structured map as a structured map over pairs `(y, z)`.
pub struct ProductMap<M>(pub M);

impl<M: LatentStructuredMap> FeatureMap for ProductMap<M> {
    type Input = M::Input;
    type Label = (M::Label, usize);

    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn phi(&self, x: &M::Input, y: &Self::Label) -> SparseVec {
        self.0.phi(x, &y.0, y.1)
    }

    fn loss(&self, truth: &Self::Label, y: &Self::Label) -> f64 {
        if truth == y {
            0.0
        } else {
            self.0.loss(&truth.0, &y.0, y.1)
        }
    }

    fn labels(&self, x: &M::Input) -> Vec<Self::Label> {
        let zs = self.0.latent_count(x);
        self.0
            .labels(x)
            .into_iter()
            .flat_map(|y| (0..zs).map(move |z| (y.clone(), z)))
            .collect()
    }

    fn label_index(&self, y: &Self::Label) -> u64 {
        // latent-major inside each label keeps the index dense for small Z
        self.0.label_index(&y.0) * 1_000_003 + y.1 as u64
    }
}

/// Latent structural example with ground truth `(y_i, z_i)`.
pub fn reduce_latent_structural<M: LatentStructuredMap>(
    group: GroupId,
    input: M::Input,
    truth: M::Label,
    latent: usize,
    map: Arc<ProductMap<M>>,
) -> StructuredGroup<ProductMap<M>> {
    reduce_structural(group, input, (truth, latent), map)
}

// ---------------------------------------------------------------------------
// Built-in maps

/// Multiclass as a structured problem: `φ(x, j)` places `x` in block `j`.
#[derive(Clone, Debug)]
pub struct MulticlassMap {
    pub classes: usize,
    pub block: usize,
}

impl FeatureMap for MulticlassMap {
    type Input = SparseVec;
    type Label = usize;

    fn dim(&self) -> usize {
        self.classes * self.block
    }

    fn phi(&self, x: &SparseVec, y: &usize) -> SparseVec {
        class_block(x, *y, self.block)
    }

    fn loss(&self, truth: &usize, y: &usize) -> f64 {
        zero_one_loss(*truth, *y)
    }

    fn labels(&self, _x: &SparseVec) -> Vec<usize> {
        (1..=self.classes).collect()
    }

    fn label_index(&self, y: &usize) -> u64 {
        *y as u64
    }
}

/// Toy chain-structured labeler: `positions` sites, each with a dense
/// feature vector of length `features` and a state in `0..states`.
///
/// `φ(x, y)` sums `x_t` into the block of state `y_t` and counts state
/// transitions; the loss is Hamming. Loss-augmented inference is Viterbi.
#[derive(Clone, Debug)]
pub struct ChainMap {
    pub positions: usize,
    pub states: usize,
    pub features: usize,
}

impl ChainMap {
    fn transition_index(&self, from: usize, to: usize) -> usize {
        self.states * self.features + from * self.states + to
    }

    fn unary(&self, x: &[Vec<f64>], t: usize, s: usize, w: &[f64]) -> f64 {
        x[t].iter()
            .enumerate()
            .map(|(f, v)| v * w[s * self.features + f])
            .sum()
    }
}

impl FeatureMap for ChainMap {
    type Input = Vec<Vec<f64>>;
    type Label = Vec<usize>;

    fn dim(&self) -> usize {
        self.states * self.features + self.states * self.states
    }

    fn phi(&self, x: &Vec<Vec<f64>>, y: &Vec<usize>) -> SparseVec {
        let mut pairs = Vec::new();
        for (t, &s) in y.iter().enumerate() {
            for (f, &v) in x[t].iter().enumerate() {
                pairs.push((s * self.features + f, v));
            }
            if t > 0 {
                pairs.push((self.transition_index(y[t - 1], s), 1.0));
            }
        }
        SparseVec::from_unsorted(pairs).expect("finite chain features")
    }

    fn loss(&self, truth: &Vec<usize>, y: &Vec<usize>) -> f64 {
        truth.iter().zip(y).filter(|(a, b)| a != b).count() as f64
    }

    fn labels(&self, _x: &Vec<Vec<f64>>) -> Vec<Vec<usize>> {
        let total = self.states.pow(self.positions as u32);
        (0..total)
            .map(|mut code| {
                (0..self.positions)
                    .map(|_| {
                        let s = code % self.states;
                        code /= self.states;
                        s
                    })
                    .collect()
            })
            .collect()
    }

    fn label_index(&self, y: &Vec<usize>) -> u64 {
        y.iter()
            .rev()
            .fold(0u64, |acc, &s| acc * self.states as u64 + s as u64)
    }

    /// Viterbi over `loss + w·φ`. Ties keep the smallest state at the last
    /// position and the smallest predecessor on the way back.
    fn loss_augmented(&self, x: &Vec<Vec<f64>>, truth: &Vec<usize>, w: &[f64]) -> Result<Vec<usize>> {
        if w.len() < self.dim() {
            return Err(SvmError::IndexOutOfRange {
                index: self.dim() - 1,
                dim: w.len(),
            });
        }
        let (n, s) = (self.positions, self.states);
        if n == 0 {
            return Ok(Vec::new());
        }
        let local = |t: usize, st: usize| -> f64 {
            self.unary(x, t, st, w) + if truth[t] != st { 1.0 } else { 0.0 }
        };
        let mut score: Vec<Vec<f64>> = vec![vec![0.0; s]; n];
        let mut back: Vec<Vec<usize>> = vec![vec![0; s]; n];
        for (st, v) in score[0].iter_mut().enumerate() {
            *v = local(0, st);
        }
        for t in 1..n {
            for st in 0..s {
                let mut best = (f64::NEG_INFINITY, 0);
                for p in 0..s {
                    let v = score[t - 1][p] + w[self.transition_index(p, st)];
                    if v > best.0 {
                        best = (v, p);
                    }
                }
                score[t][st] = best.0 + local(t, st);
                back[t][st] = best.1;
            }
        }
        let mut labels = vec![0; n];
        let top = score[n - 1].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        labels[n - 1] = (0..s).find(|&st| score[n - 1][st] == top).expect("non-empty");
        for t in (1..n).rev() {
            labels[t - 1] = back[t][labels[t]];
        }
        Ok(labels)
    }
}

/// Toy latent map: `φ(x, z)` is the window `x[z .. z + width]`.
#[derive(Clone, Debug)]
pub struct WindowLatentMap {
    pub width: usize,
}

impl LatentMap for WindowLatentMap {
    type Input = Vec<f64>;

    fn dim(&self) -> usize {
        self.width
    }

    fn phi(&self, x: &Vec<f64>, z: usize) -> SparseVec {
        SparseVec::from_dense(&x[z..z + self.width]).expect("finite signal")
    }

    fn latent_count(&self, x: &Vec<f64>) -> usize {
        (x.len() + 1).saturating_sub(self.width)
    }
}

/// Toy latent structured map: a multiclass label plus a window offset,
/// with 0-1 loss on the class.
#[derive(Clone, Debug)]
pub struct LatentMulticlassMap {
    pub classes: usize,
    pub width: usize,
}

impl LatentStructuredMap for LatentMulticlassMap {
    type Input = Vec<f64>;
    type Label = usize;

    fn dim(&self) -> usize {
        self.classes * self.width
    }

    fn phi(&self, x: &Vec<f64>, y: &usize, z: usize) -> SparseVec {
        SparseVec::from_dense(&x[z..z + self.width])
            .expect("finite signal")
            .shifted((y - 1) * self.width)
    }

    fn loss(&self, truth: &usize, y: &usize, _z: usize) -> f64 {
        zero_one_loss(*truth, *y)
    }

    fn labels(&self, _x: &Vec<f64>) -> Vec<usize> {
        (1..=self.classes).collect()
    }

    fn latent_count(&self, x: &Vec<f64>) -> usize {
        (x.len() + 1).saturating_sub(self.width)
    }

    fn label_index(&self, y: &usize) -> u64 {
        *y as u64
    }
}

// ---------------------------------------------------------------------------
// Flat families as used by the file formats and the CLI

/// A flat problem family with its reduction parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    Binary,
    Multiclass { classes: usize },
    Regression { epsilon: f64 },
    /// Constraints given directly; no reduction.
    Grouped,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Binary => "binary",
            Family::Multiclass { .. } => "multiclass",
            Family::Regression { .. } => "regression",
            Family::Grouped => "grouped",
        }
    }
}

/// How raw examples become constraint groups.
#[derive(Clone, Debug, PartialEq)]
pub struct Reduction {
    pub family: Family,
    /// Input feature count `n` (0-based indices `< n`).
    pub features: usize,
    pub c: f64,
    /// Bias constant `v`; zero disables the bias feature.
    pub bias: f64,
}

impl Reduction {
    pub fn new(family: Family, features: usize, c: f64, bias: f64) -> Result<Self> {
        check_cost(c)?;
        if !(bias.is_finite() && bias >= 0.0) {
            return Err(SvmError::Config(format!("bias constant must be ≥ 0, got {bias}")));
        }
        if let Family::Multiclass { classes } = family {
            if classes < 2 {
                return Err(SvmError::Config(format!("multiclass needs K ≥ 2, got {classes}")));
            }
        }
        if let Family::Regression { epsilon } = family {
            if !(epsilon >= 0.0 && epsilon.is_finite()) {
                return Err(SvmError::Config(format!("epsilon must be ≥ 0, got {epsilon}")));
            }
        }
        Ok(Reduction {
            family,
            features,
            c,
            bias,
        })
    }

    fn augmented(&self) -> usize {
        match self.family {
            Family::Grouped => self.features,
            _ if self.bias != 0.0 => self.features + 1,
            _ => self.features,
        }
    }

    /// Length of the weight vector.
    pub fn weight_dim(&self) -> usize {
        match self.family {
            Family::Multiclass { classes } => classes * self.augmented(),
            _ => self.augmented(),
        }
    }

    /// Input features with the bias appended.
    pub fn augment(&self, x: &SparseVec) -> Result<SparseVec> {
        match self.family {
            Family::Grouped => {
                x.check_dim(self.features)?;
                Ok(x.clone())
            }
            _ => with_bias(x, self.features, self.bias),
        }
    }

    /// Constraint groups for the `index`-th example of a flat family.
    pub fn reduce(&self, index: u64, ex: &LabeledExample) -> Result<Vec<FiniteGroup>> {
        match self.family {
            Family::Binary => {
                let c = reduce_binary(index, ex, self.c, self.bias, self.features)?;
                Ok(vec![FiniteGroup::new(index, vec![c])])
            }
            Family::Multiclass { classes } => {
                let x = with_bias(&ex.features, self.features, self.bias)?;
                let aug = LabeledExample {
                    features: x,
                    ..ex.clone()
                };
                let cons = reduce_multiclass(index, &aug, classes, self.augmented(), self.c, &zero_one_loss)?;
                Ok(vec![FiniteGroup::new(index, cons)])
            }
            Family::Regression { epsilon } => {
                let x = with_bias(&ex.features, self.features, self.bias)?;
                let aug = LabeledExample {
                    features: x,
                    ..ex.clone()
                };
                let [a, b] = reduce_regression(index, &aug, epsilon, self.c)?;
                Ok(vec![
                    FiniteGroup::new(a.group, vec![a]),
                    FiniteGroup::new(b.group, vec![b]),
                ])
            }
            Family::Grouped => Err(SvmError::Config(
                "grouped data is already in constraint form".into(),
            )),
        }
    }

    /// Prediction for input `x` under weights `w`.
    pub fn predict(&self, w: &[f64], x: &SparseVec) -> Result<Prediction> {
        self.predict_with(x, |v| v.dot(w))
    }

    /// Prediction with a custom linear score, applied to the augmented (and,
    /// for multiclass, block-placed) input.
    pub fn predict_with(&self, x: &SparseVec, score: impl Fn(&SparseVec) -> Result<f64>) -> Result<Prediction> {
        if x.required_dim() > self.features {
            return Err(SvmError::DimensionMismatch {
                expected: self.features,
                found: x.required_dim(),
            });
        }
        let xa = self.augment(x)?;
        match self.family {
            Family::Binary => {
                let s = score(&xa)?;
                Ok(Prediction::Binary(s > 0.0, s))
            }
            Family::Multiclass { classes } => {
                let block = self.augmented();
                let mut best = (f64::NEG_INFINITY, 1);
                for j in 1..=classes {
                    let s = score(&class_block(&xa, j, block))?;
                    if s > best.0 {
                        best = (s, j);
                    }
                }
                Ok(Prediction::Class(best.1, best.0))
            }
            Family::Regression { .. } | Family::Grouped => Ok(Prediction::Real(score(&xa)?)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Prediction {
    /// Label `w·x > 0` and the score.
    Binary(bool, f64),
    Class(usize, f64),
    Real(f64),
}

impl std::fmt::Display for Prediction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Prediction::Binary(true, _) => write!(f, "+1"),
            Prediction::Binary(false, _) => write!(f, "-1"),
            Prediction::Class(c, _) => write!(f, "{c}"),
            Prediction::Real(v) => write!(f, "{v}"),
        }
    }
}
