//! Text formats: labeled datasets (libsvm style), the grouped constraint
//! format, model files, and the dual sidecar written next to a model.
//!
//! Feature indices are 1-based on disk and 0-based in memory. Lines starting
//! with `#` are comments; a comment of the form `# dim=N classes=K` is read
//! as a dataset header.

use std::collections::VecDeque;
use std::fmt::{self, Write as _};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Result, SvmError};
use crate::extensions::{NonNegSpec, RegularizerSpec};
use crate::online::{ExampleSource, FiniteGroup};
use crate::problem::{Constraint, GroupId};
use crate::reductions::{Family, Label, LabeledExample, Prediction, Reduction};
use crate::sparse::SparseVec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Format {
    Binary,
    Multiclass,
    Regression,
    Grouped,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Binary => "binary",
            Format::Multiclass => "multiclass",
            Format::Regression => "regression",
            Format::Grouped => "grouped",
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Format {
    type Err = SvmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(Format::Binary),
            "multiclass" => Ok(Format::Multiclass),
            "regression" => Ok(Format::Regression),
            "grouped" => Ok(Format::Grouped),
            other => Err(SvmError::Config(format!("unknown format {other:?}"))),
        }
    }
}

/// Optional metadata from a `# key=value ...` comment line.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DatasetHeader {
    pub format: Option<Format>,
    /// Feature count (largest 1-based index allowed).
    pub dim: Option<usize>,
    pub classes: Option<usize>,
}

impl DatasetHeader {
    /// Reads `key=value` pairs from a comment line. Comments without any
    /// recognized key yield `None`.
    pub fn parse(line: &str, line_no: usize) -> Result<Option<Self>> {
        let Some(body) = line.trim_start().strip_prefix('#') else {
            return Ok(None);
        };
        let mut header = DatasetHeader::default();
        let mut any = false;
        for token in body.split_whitespace() {
            let Some((key, value)) = token.split_once('=') else {
                continue;
            };
            let count = |v: &str| {
                v.parse::<usize>()
                    .map_err(|_| SvmError::parse(line_no, format!("bad header value {token:?}")))
            };
            match key {
                "dim" => {
                    let d = count(value)?;
                    if d == 0 {
                        return Err(SvmError::parse(line_no, "header dim must be at least 1"));
                    }
                    header.dim = Some(d);
                }
                "classes" => {
                    let k = count(value)?;
                    if k < 2 {
                        return Err(SvmError::parse(line_no, "header classes must be at least 2"));
                    }
                    header.classes = Some(k);
                }
                "format" => {
                    header.format = Some(value.parse().map_err(|_| {
                        SvmError::parse(line_no, format!("unknown format {value:?}"))
                    })?)
                }
                _ => continue,
            }
            any = true;
        }
        Ok(any.then_some(header))
    }
}

fn is_skippable(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('#')
}

/// `idx:val` tokens with 1-based, strictly increasing indices.
pub fn parse_features<'a>(tokens: impl Iterator<Item = &'a str>, line_no: usize) -> Result<SparseVec> {
    let mut pairs = Vec::new();
    let mut last = 0usize;
    for token in tokens {
        let (i, v) = token
            .split_once(':')
            .ok_or_else(|| SvmError::parse(line_no, format!("expected index:value, got {token:?}")))?;
        let index: usize = i
            .parse()
            .map_err(|_| SvmError::parse(line_no, format!("bad feature index {i:?}")))?;
        if index == 0 {
            return Err(SvmError::parse(line_no, "feature indices are 1-based"));
        }
        if index <= last {
            return Err(SvmError::parse(
                line_no,
                format!("feature index {index} does not increase (after {last})"),
            ));
        }
        last = index;
        let value: f64 = v
            .parse()
            .map_err(|_| SvmError::parse(line_no, format!("bad feature value {v:?}")))?;
        if !value.is_finite() {
            return Err(SvmError::parse(line_no, format!("non-finite feature value {v:?}")));
        }
        pairs.push((index - 1, value));
    }
    SparseVec::new(pairs).map_err(|e| SvmError::parse(line_no, e.to_string()))
}

fn parse_label(token: &str, format: Format, line_no: usize) -> Result<Label> {
    let bad = || SvmError::parse(line_no, format!("bad {format} label {token:?}"));
    match format {
        Format::Binary => match token {
            "+1" | "1" => Ok(Label::Binary(true)),
            "-1" => Ok(Label::Binary(false)),
            _ => Err(bad()),
        },
        Format::Multiclass => match token.parse::<usize>() {
            Ok(k) if k >= 1 => Ok(Label::Class(k)),
            _ => Err(bad()),
        },
        Format::Regression => match token.parse::<f64>() {
            Ok(y) if y.is_finite() => Ok(Label::Real(y)),
            _ => Err(bad()),
        },
        Format::Grouped => Err(SvmError::parse(line_no, "grouped lines carry no label")),
    }
}

/// `label idx:val ...` for the binary, multiclass, and regression formats.
pub fn parse_labeled_line(line: &str, format: Format, line_no: usize) -> Result<LabeledExample> {
    let mut tokens = line.split_whitespace();
    let label = tokens
        .next()
        .ok_or_else(|| SvmError::parse(line_no, "empty line"))?;
    let label = parse_label(label, format, line_no)?;
    Ok(LabeledExample::new(parse_features(tokens, line_no)?, label))
}

/// `group margin idx:val ...`; the local index is left at 0 for the
/// caller to assign.
pub fn parse_grouped_line(line: &str, line_no: usize) -> Result<Constraint> {
    let mut tokens = line.split_whitespace();
    let group: GroupId = tokens
        .next()
        .ok_or_else(|| SvmError::parse(line_no, "empty line"))?
        .parse()
        .map_err(|_| SvmError::parse(line_no, "group id must be a non-negative integer"))?;
    let margin_tok = tokens
        .next()
        .ok_or_else(|| SvmError::parse(line_no, "missing margin"))?;
    let margin: f64 = margin_tok
        .parse()
        .map_err(|_| SvmError::parse(line_no, format!("bad margin {margin_tok:?}")))?;
    if !margin.is_finite() {
        return Err(SvmError::parse(line_no, "non-finite margin"));
    }
    let x = parse_features(tokens, line_no)?;
    Constraint::new(group, 0, x, margin).map_err(|e| SvmError::parse(line_no, e.to_string()))
}

fn write_features(out: &mut String, x: &SparseVec) {
    for &(k, v) in x.entries() {
        let _ = write!(out, " {}:{}", k + 1, v);
    }
}

/// Inverse of [`parse_grouped_line`].
pub fn format_grouped_line(c: &Constraint) -> String {
    let mut out = format!("{} {}", c.group, c.margin);
    write_features(&mut out, &c.x);
    out
}

/// Inverse of [`parse_labeled_line`].
pub fn format_labeled_line(ex: &LabeledExample) -> String {
    let mut out = match ex.label {
        Label::Binary(true) => "+1".to_string(),
        Label::Binary(false) => "-1".to_string(),
        Label::Class(k) => k.to_string(),
        Label::Real(y) => y.to_string(),
    };
    write_features(&mut out, &ex.features);
    out
}

/// Line reader that tracks line numbers and byte offsets for errors.
struct Lines {
    path: PathBuf,
    reader: BufReader<File>,
    line_no: usize,
    offset: u64,
    buf: String,
}

impl Lines {
    fn open(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| SvmError::io(path, 0, e))?;
        Ok(Lines {
            path: path.to_path_buf(),
            reader: BufReader::new(file),
            line_no: 0,
            offset: 0,
            buf: String::new(),
        })
    }

    /// Next line with its number, or `None` at end of file.
    fn next_line(&mut self) -> Result<Option<(usize, &str)>> {
        self.buf.clear();
        let n = self
            .reader
            .read_line(&mut self.buf)
            .map_err(|e| SvmError::io(&self.path, self.offset, e))?;
        if n == 0 {
            return Ok(None);
        }
        self.offset += n as u64;
        self.line_no += 1;
        Ok(Some((self.line_no, self.buf.trim_end_matches(['\n', '\r']))))
    }
}

/// What a prepass over a dataset found.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DatasetInfo {
    pub header: DatasetHeader,
    /// Largest 1-based feature index seen.
    pub max_index: usize,
    /// Largest class label seen (multiclass only).
    pub max_class: usize,
    /// Examples (labeled formats) or groups (grouped format).
    pub examples: usize,
}

impl DatasetInfo {
    /// Header dimension if present, otherwise the largest index seen.
    pub fn features(&self) -> usize {
        self.header.dim.unwrap_or(self.max_index)
    }

    pub fn classes(&self) -> usize {
        self.header.classes.unwrap_or(self.max_class)
    }
}

/// Streams through `path` once, validating every line.
pub fn scan_dataset(path: &Path, format: Format) -> Result<DatasetInfo> {
    let mut lines = Lines::open(path)?;
    let mut info = DatasetInfo::default();
    let mut last_group: Option<GroupId> = None;
    while let Some((no, line)) = lines.next_line()? {
        if is_skippable(line) {
            if info.examples == 0 {
                if let Some(h) = DatasetHeader::parse(line, no)? {
                    info.header = h;
                }
            }
            continue;
        }
        let x = if format == Format::Grouped {
            let c = parse_grouped_line(line, no)?;
            if last_group != Some(c.group) {
                info.examples += 1;
                last_group = Some(c.group);
            }
            c.x
        } else {
            let ex = parse_labeled_line(line, format, no)?;
            if let Label::Class(k) = ex.label {
                info.max_class = info.max_class.max(k);
            }
            info.examples += 1;
            ex.features
        };
        info.max_index = info.max_index.max(x.required_dim());
    }
    if let Some(dim) = info.header.dim {
        if info.max_index > dim {
            return Err(SvmError::DimensionMismatch {
                expected: dim,
                found: info.max_index,
            });
        }
    }
    Ok(info)
}

/// Whole-file parse of a labeled dataset.
pub fn read_examples(path: &Path, format: Format) -> Result<Vec<LabeledExample>> {
    let mut lines = Lines::open(path)?;
    let mut out = Vec::new();
    while let Some((no, line)) = lines.next_line()? {
        if !is_skippable(line) {
            out.push(parse_labeled_line(line, format, no)?);
        }
    }
    Ok(out)
}

/// Whole-file parse of a grouped dataset, locals numbered within each run.
pub fn read_grouped(path: &Path) -> Result<Vec<Constraint>> {
    let mut src = FileSource::open(path, Reduction::new(Family::Grouped, usize::MAX, 1.0, 0.0)?)?;
    let mut out = Vec::new();
    while let Some(g) = src.next_group()? {
        out.extend(g.into_constraints());
    }
    Ok(out)
}

/// A dataset file read one example at a time and reduced on the fly.
///
/// Memory use is bounded by the longest line (plus, for the grouped
/// format, the longest run of lines sharing a group id). Rewinding reopens
/// the file.
pub struct FileSource {
    lines: Lines,
    reduction: Reduction,
    prior: Option<Arc<RegularizerSpec>>,
    format: Format,
    classes: Option<usize>,
    next_index: u64,
    queue: VecDeque<FiniteGroup>,
    pending: Option<(usize, Constraint)>,
    last_group: Option<GroupId>,
}

impl FileSource {
    pub fn open(path: &Path, reduction: Reduction) -> Result<Self> {
        let (format, classes) = match reduction.family {
            Family::Binary => (Format::Binary, None),
            Family::Multiclass { classes } => (Format::Multiclass, Some(classes)),
            Family::Regression { .. } => (Format::Regression, None),
            Family::Grouped => (Format::Grouped, None),
        };
        Ok(FileSource {
            lines: Lines::open(path)?,
            reduction,
            prior: None,
            format,
            classes,
            next_index: 0,
            queue: VecDeque::new(),
            pending: None,
            last_group: None,
        })
    }

    /// Reparameterizes every constraint under `prior`.
    pub fn with_prior(mut self, prior: Option<Arc<RegularizerSpec>>) -> Self {
        self.prior = prior;
        self
    }

    pub fn path(&self) -> &Path {
        &self.lines.path
    }

    pub fn reduction(&self) -> &Reduction {
        &self.reduction
    }

    fn finish(&self, group: FiniteGroup) -> Result<FiniteGroup> {
        match &self.prior {
            None => Ok(group),
            Some(spec) => {
                let id = crate::online::SlackGroup::id(&group);
                let cons = group
                    .into_constraints()
                    .iter()
                    .map(|c| spec.transform(c))
                    .collect::<Result<Vec<_>>>()?;
                Ok(FiniteGroup::new(id, cons))
            }
        }
    }

    fn next_labeled(&mut self) -> Result<Option<FiniteGroup>> {
        loop {
            if let Some(g) = self.queue.pop_front() {
                return self.finish(g).map(Some);
            }
            let Some((no, line)) = self.lines.next_line()? else {
                return Ok(None);
            };
            if is_skippable(line) {
                continue;
            }
            let ex = parse_labeled_line(line, self.format, no)?;
            if let (Label::Class(k), Some(classes)) = (ex.label, self.classes) {
                if k > classes {
                    return Err(SvmError::parse(no, format!("class {k} outside 1..={classes}")));
                }
            }
            if ex.features.required_dim() > self.reduction.features {
                return Err(SvmError::parse(
                    no,
                    format!(
                        "feature index {} exceeds dimension {}",
                        ex.features.required_dim(),
                        self.reduction.features
                    ),
                ));
            }
            let groups = self
                .reduction
                .reduce(self.next_index, &ex)
                .map_err(|e| SvmError::parse(no, e.to_string()))?;
            self.next_index += 1;
            self.queue.extend(groups);
        }
    }

    fn next_grouped(&mut self) -> Result<Option<FiniteGroup>> {
        let mut run: Vec<Constraint> = Vec::new();
        if let Some((_, c)) = self.pending.take() {
            run.push(c);
        }
        while let Some((no, line)) = self.lines.next_line()? {
            if is_skippable(line) {
                continue;
            }
            let mut c = parse_grouped_line(line, no)?;
            if c.x.required_dim() > self.reduction.features {
                return Err(SvmError::parse(
                    no,
                    format!(
                        "feature index {} exceeds dimension {}",
                        c.x.required_dim(),
                        self.reduction.features
                    ),
                ));
            }
            match run.first() {
                Some(first) if first.group == c.group => {
                    c.local = run.len() as u64;
                    run.push(c);
                }
                Some(_) => {
                    self.pending = Some((no, c));
                    break;
                }
                None => {
                    if self.last_group.is_some_and(|g| c.group <= g) {
                        return Err(SvmError::parse(
                            no,
                            format!("group {} appears after group {}", c.group, self.last_group.unwrap_or(0)),
                        ));
                    }
                    run.push(c);
                }
            }
        }
        if let Some((no, next)) = &self.pending {
            let current = run[0].group;
            if next.group <= current {
                return Err(SvmError::parse(
                    *no,
                    format!("group {} appears after group {current}", next.group),
                ));
            }
        }
        match run.first() {
            None => Ok(None),
            Some(first) => {
                let id = first.group;
                self.last_group = Some(id);
                self.finish(FiniteGroup::new(id, run)).map(Some)
            }
        }
    }
}

impl ExampleSource for FileSource {
    type Group = FiniteGroup;

    fn dim(&self) -> usize {
        self.reduction.weight_dim()
    }

    fn next_group(&mut self) -> Result<Option<FiniteGroup>> {
        match self.format {
            Format::Grouped => self.next_grouped(),
            _ => self.next_labeled(),
        }
    }

    fn rewind(&mut self) -> Result<()> {
        self.lines = Lines::open(&self.lines.path.clone())?;
        self.next_index = 0;
        self.queue.clear();
        self.pending = None;
        self.last_group = None;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Models

const MODEL_MAGIC: &str = "dualsvm-model";
const DUAL_MAGIC: &str = "dualsvm-dual";
const VERSION: u32 = 1;

/// A trained model: reduction metadata, extensions, and the weights in the
/// space the solver worked in (reparameterized when a prior is present).
#[derive(Clone, Debug, PartialEq)]
pub struct ModelFile {
    pub reduction: Reduction,
    pub weights: Vec<f64>,
    pub nonneg: NonNegSpec,
    pub prior: Option<RegularizerSpec>,
}

impl ModelFile {
    pub fn new(
        reduction: Reduction,
        weights: Vec<f64>,
        nonneg: NonNegSpec,
        prior: Option<RegularizerSpec>,
    ) -> Result<Self> {
        if weights.len() != reduction.weight_dim() {
            return Err(SvmError::Model(format!(
                "{} weights for dimension {}",
                weights.len(),
                reduction.weight_dim()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(SvmError::NonFinite("model weights"));
        }
        if let Some(p) = &prior {
            if p.dim() != weights.len() {
                return Err(SvmError::Model(format!(
                    "prior has dimension {} but the model has {}",
                    p.dim(),
                    weights.len()
                )));
            }
        }
        Ok(ModelFile {
            reduction,
            weights,
            nonneg,
            prior,
        })
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Weights in the original feature space.
    pub fn original_weights(&self) -> Vec<f64> {
        match &self.prior {
            Some(p) => p.recover_w(&self.weights),
            None => self.weights.clone(),
        }
    }

    /// Score of an augmented input vector; goes through the reparameterized
    /// space when a prior is present.
    pub fn score(&self, xa: &SparseVec) -> Result<f64> {
        match &self.prior {
            Some(p) => crate::extensions::recover_score(&self.weights, p, &p.transform_features(xa)?),
            None => xa.dot(&self.weights),
        }
    }

    pub fn predict(&self, x: &SparseVec) -> Result<Prediction> {
        self.reduction.predict_with(x, |xa| self.score(xa))
    }

    /// The training objective's data in the model's space, streamed from
    /// `path`.
    pub fn source(&self, path: &Path) -> Result<FileSource> {
        Ok(FileSource::open(path, self.reduction.clone())?.with_prior(self.prior.clone().map(Arc::new)))
    }

    pub fn to_text(&self) -> String {
        let r = &self.reduction;
        let mut out = format!("{MODEL_MAGIC} {VERSION}\n");
        let _ = writeln!(out, "family {}", r.family.name());
        match r.family {
            Family::Multiclass { classes } => {
                let _ = writeln!(out, "classes {classes}");
            }
            Family::Regression { epsilon } => {
                let _ = writeln!(out, "epsilon {epsilon}");
            }
            _ => {}
        }
        let _ = writeln!(out, "features {}", r.features);
        let _ = writeln!(out, "c {}", r.c);
        let _ = writeln!(out, "bias {}", r.bias);
        let _ = writeln!(out, "dim {}", self.dim());
        out.push_str("nonneg");
        for k in self.nonneg.indices() {
            let _ = write!(out, " {}", k + 1);
        }
        out.push('\n');
        match &self.prior {
            None => out.push_str("prior 0\n"),
            Some(p) => {
                let _ = writeln!(out, "prior {}", p.dim());
                for (k, (m, s)) in p.w0().iter().zip(p.r_diag()).enumerate() {
                    let _ = writeln!(out, "{} {m} {s}", k + 1);
                }
            }
        }
        let nz: Vec<(usize, f64)> = self
            .weights
            .iter()
            .copied()
            .enumerate()
            .filter(|&(_, v)| v != 0.0)
            .collect();
        let _ = writeln!(out, "weights {}", nz.len());
        for (k, v) in nz {
            let _ = writeln!(out, "{} {v}", k + 1);
        }
        out.push_str("end\n");
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| -> Result<(usize, Vec<&str>)> {
            let (no, line) = lines
                .next()
                .ok_or_else(|| SvmError::Model(format!("truncated before {what}")))?;
            Ok((no, line.split_whitespace().collect()))
        };
        let bad = |no: usize, msg: String| SvmError::Model(format!("line {no}: {msg}"));
        fn num<T: FromStr>(no: usize, tok: Option<&&str>) -> Result<T> {
            tok.and_then(|t| t.parse().ok())
                .ok_or_else(|| SvmError::Model(format!("line {no}: bad number")))
        }
        let keyed = |no: usize, toks: &[&str], key: &str| -> Result<()> {
            if toks.first() == Some(&key) {
                Ok(())
            } else {
                Err(bad(no, format!("expected {key}")))
            }
        };

        let (no, toks) = next("header")?;
        if toks.first() != Some(&MODEL_MAGIC) {
            return Err(bad(no, "not a model file".into()));
        }
        let version: u32 = num(no, toks.get(1))?;
        if version != VERSION {
            return Err(SvmError::Model(format!("unsupported model version {version}")));
        }
        let (no, toks) = next("family")?;
        keyed(no, &toks, "family")?;
        let family = match toks.get(1).copied() {
            Some("binary") => Family::Binary,
            Some("grouped") => Family::Grouped,
            Some("multiclass") => {
                let (no, toks) = next("classes")?;
                keyed(no, &toks, "classes")?;
                Family::Multiclass {
                    classes: num(no, toks.get(1))?,
                }
            }
            Some("regression") => {
                let (no, toks) = next("epsilon")?;
                keyed(no, &toks, "epsilon")?;
                Family::Regression {
                    epsilon: num(no, toks.get(1))?,
                }
            }
            other => return Err(bad(no, format!("unknown family {other:?}"))),
        };
        let mut field = |key: &str| -> Result<(usize, Vec<&str>)> {
            let (no, toks) = next(key)?;
            keyed(no, &toks, key)?;
            Ok((no, toks))
        };
        let (no, toks) = field("features")?;
        let features: usize = num(no, toks.get(1))?;
        let (no, toks) = field("c")?;
        let c: f64 = num(no, toks.get(1))?;
        let (no, toks) = field("bias")?;
        let bias: f64 = num(no, toks.get(1))?;
        let reduction = Reduction::new(family, features, c, bias)?;
        let (no, toks) = field("dim")?;
        let dim: usize = num(no, toks.get(1))?;
        if dim != reduction.weight_dim() {
            return Err(bad(no, format!("dim {dim} disagrees with reduction ({})", reduction.weight_dim())));
        }
        let (no, toks) = field("nonneg")?;
        let idx = toks[1..]
            .iter()
            .map(|t| match t.parse::<usize>() {
                Ok(k) if k >= 1 => Ok(k - 1),
                _ => Err(bad(no, format!("bad index {t:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let nonneg = NonNegSpec::new(idx, dim)?;
        let (no, toks) = field("prior")?;
        let n_prior: usize = num(no, toks.get(1))?;
        let prior = if n_prior == 0 {
            None
        } else {
            if n_prior != dim {
                return Err(bad(no, format!("prior has {n_prior} rows for dimension {dim}")));
            }
            let mut w0 = Vec::with_capacity(dim);
            let mut r = Vec::with_capacity(dim);
            for k in 0..dim {
                let (no, toks) = next("prior row")?;
                let i: usize = num(no, toks.first())?;
                if i != k + 1 {
                    return Err(bad(no, format!("prior row {i} out of order")));
                }
                w0.push(num(no, toks.get(1))?);
                r.push(num(no, toks.get(2))?);
            }
            Some(RegularizerSpec::new(w0, r)?)
        };
        let (no, toks) = next("weights")?;
        keyed(no, &toks, "weights")?;
        let nnz: usize = num(no, toks.get(1))?;
        let mut weights = vec![0.0; dim];
        for _ in 0..nnz {
            let (no, toks) = next("weight row")?;
            let i: usize = num(no, toks.first())?;
            if i == 0 || i > dim {
                return Err(bad(no, format!("weight index {i} out of range")));
            }
            weights[i - 1] = num(no, toks.get(1))?;
        }
        let (no, toks) = next("end")?;
        keyed(no, &toks, "end")?;
        ModelFile::new(reduction, weights, nonneg, prior)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| SvmError::io(path, 0, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SvmError::io(path, 0, e))?;
        ModelFile::from_text(&text)
    }
}

/// The certificate written next to a model: the dual value reached during
/// training and the upper bound that was reported with it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualSidecar {
    pub lb: f64,
    pub ub: f64,
    pub tol: f64,
}

impl DualSidecar {
    /// `<model>.dual`.
    pub fn path_for(model: &Path) -> PathBuf {
        let mut s = model.as_os_str().to_owned();
        s.push(".dual");
        PathBuf::from(s)
    }

    pub fn to_text(&self) -> String {
        format!(
            "{DUAL_MAGIC} {VERSION}\nlb {}\nub {}\ntol {}\n",
            self.lb, self.ub, self.tol
        )
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().unwrap_or("").split_whitespace().collect();
        if header != [DUAL_MAGIC, "1"] {
            return Err(SvmError::Model("not a dual sidecar (version 1)".into()));
        }
        let mut value = |key: &str| -> Result<f64> {
            let line = lines
                .next()
                .ok_or_else(|| SvmError::Model(format!("sidecar truncated before {key}")))?;
            match line.split_once(' ') {
                Some((k, v)) if k == key => v
                    .trim()
                    .parse()
                    .map_err(|_| SvmError::Model(format!("bad sidecar value for {key}"))),
                _ => Err(SvmError::Model(format!("sidecar expected {key}"))),
            }
        };
        Ok(DualSidecar {
            lb: value("lb")?,
            ub: value("ub")?,
            tol: value("tol")?,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| SvmError::io(path, 0, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SvmError::io(path, 0, e))?;
        DualSidecar::from_text(&text)
    }
}

/// Reads a prior file: lines `idx w0 variance` with 1-based indices;
/// coordinates not listed get mean 0 and variance 1.
pub fn read_prior(path: &Path, dim: usize) -> Result<RegularizerSpec> {
    let mut lines = Lines::open(path)?;
    let mut w0 = vec![0.0; dim];
    let mut var = vec![1.0; dim];
    while let Some((no, line)) = lines.next_line()? {
        if is_skippable(line) {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(SvmError::parse(no, "expected `index mean variance`"));
        }
        let k: usize = toks[0]
            .parse()
            .map_err(|_| SvmError::parse(no, format!("bad index {:?}", toks[0])))?;
        if k == 0 || k > dim {
            return Err(SvmError::parse(no, format!("index {k} outside 1..={dim}")));
        }
        let m: f64 = toks[1]
            .parse()
            .map_err(|_| SvmError::parse(no, format!("bad mean {:?}", toks[1])))?;
        let v: f64 = toks[2]
            .parse()
            .map_err(|_| SvmError::parse(no, format!("bad variance {:?}", toks[2])))?;
        w0[k - 1] = m;
        var[k - 1] = v;
    }
    RegularizerSpec::from_variances(w0, &var)
}

/// Reads whitespace-separated 1-based indices of non-negative weights.
pub fn read_nonneg(path: &Path, dim: usize) -> Result<NonNegSpec> {
    let mut lines = Lines::open(path)?;
    let mut idx = Vec::new();
    while let Some((no, line)) = lines.next_line()? {
        if is_skippable(line) {
            continue;
        }
        for t in line.split_whitespace() {
            match t.parse::<usize>() {
                Ok(k) if (1..=dim).contains(&k) => idx.push(k - 1),
                _ => return Err(SvmError::parse(no, format!("bad index {t:?} (dimension {dim})"))),
            }
        }
    }
    NonNegSpec::new(idx, dim)
}
