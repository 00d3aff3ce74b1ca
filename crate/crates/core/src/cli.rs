//! The `dualsvm` command line: `train`, `predict`, `verify`.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 not converged or failed verification, 4 model cannot be verified
//! (no dual sidecar).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::batch::{gap_satisfied, BatchConfig, BatchSolver};
use crate::error::{Result, SvmError};
use crate::extensions::NonNegSpec;
use crate::io::{read_nonneg, read_prior, scan_dataset, DualSidecar, Format, ModelFile};
use crate::online::{collect_constraints, streaming_primal, OnlineConfig, OnlineLearner, PrunePolicy, Schedule};
use crate::problem::DualState;
use crate::reductions::{Family, Reduction};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_UNVERIFIABLE: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "dualsvm", version, about = "Shared-slack linear SVM solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a model and write it with its dual sidecar.
    Train(TrainConfig),
    /// Print one prediction per input line.
    Predict(PredictArgs),
    /// Certify a model's duality gap with one pass over the data.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Binary,
    Multiclass,
    Regression,
    Grouped,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Format {
        match f {
            FormatArg::Binary => Format::Binary,
            FormatArg::Multiclass => Format::Multiclass,
            FormatArg::Regression => Format::Regression,
            FormatArg::Grouped => Format::Grouped,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Dual coordinate ascent over the whole dataset in memory.
    Batch,
    /// One streaming pass.
    Online,
    /// Streaming passes until certified or out of passes.
    Cyclic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PruneArg {
    Aggressive,
    Lazy,
    Never,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScheduleArg {
    Gap,
    Ratio,
    Memory,
}

#[derive(Args, Clone, Debug)]
pub struct TrainConfig {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Binary)]
    pub format: FormatArg,
    #[arg(long, value_enum, default_value_t = Mode::Cyclic)]
    pub mode: Mode,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    /// Constant appended as the bias feature.
    #[arg(long, default_value_t = 1.0)]
    pub bias: f64,
    /// Maximum cached constraints in online modes; 0 means unlimited.
    #[arg(long, default_value_t = 0)]
    pub cache_cap: usize,
    #[arg(long, default_value_t = 10)]
    pub max_passes: usize,
    #[arg(long, value_enum, default_value_t = PruneArg::Aggressive)]
    pub prune: PruneArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// File of 1-based weight indices constrained to be non-negative.
    #[arg(long)]
    pub nonneg: Option<PathBuf>,
    /// File of `index mean variance` lines for a diagonal Gaussian prior.
    #[arg(long)]
    pub prior: Option<PathBuf>,
    #[arg(long)]
    pub model: PathBuf,
    /// Number of classes (multiclass); read from the header or labels if absent.
    #[arg(long)]
    pub classes: Option<usize>,
    /// Insensitivity width for regression.
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    /// Sweep cap for each batch optimize.
    #[arg(long, default_value_t = 1000)]
    pub max_sweeps: usize,
    #[arg(long, value_enum, default_value_t = ScheduleArg::Gap)]
    pub schedule: ScheduleArg,
    /// Print a progress line to stderr after every pass.
    #[arg(long)]
    pub progress: bool,
}

#[derive(Args, Clone, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
}

#[derive(Args, Clone, Debug)]
pub struct VerifyArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    let result = match cli.command {
        Command::Train(cfg) => cmd_train(&cfg, out, err),
        Command::Predict(args) => cmd_predict(&args.model, &args.data, out),
        Command::Verify(args) => cmd_verify(&args.model, &args.data, args.tol, out, err),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Maps a library error to the process exit code.
pub fn exit_code(e: &SvmError) -> i32 {
    match e {
        SvmError::Config(_) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

/// Summary of a training run; printed as one `key=value` line.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainSummary {
    pub converged: bool,
    pub mode: Mode,
    pub lb: f64,
    pub ub: f64,
    pub support_vectors: usize,
    pub cache: usize,
    pub peak_cache: usize,
    pub passes: usize,
    pub wall_ms: u128,
}

impl TrainSummary {
    pub fn gap(&self) -> f64 {
        self.ub - self.lb
    }

    pub fn line(&self) -> String {
        format!(
            "status={} mode={} lb={} ub={} gap={} sv={} cache={} peak_cache={} passes={} wall_ms={}",
            if self.converged { "converged" } else { "not_converged" },
            match self.mode {
                Mode::Batch => "batch",
                Mode::Online => "online",
                Mode::Cyclic => "cyclic",
            },
            self.lb,
            self.ub,
            self.gap(),
            self.support_vectors,
            self.cache,
            self.peak_cache,
            self.passes,
            self.wall_ms
        )
    }
}

fn validate(cfg: &TrainConfig) -> Result<()> {
    let positive = |v: f64, name: &str| {
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(SvmError::Config(format!("--{name} must be positive, got {v}")))
        }
    };
    positive(cfg.c, "c")?;
    positive(cfg.tol, "tol")?;
    positive(cfg.bias, "bias")?;
    if cfg.max_passes == 0 {
        return Err(SvmError::Config("--max-passes must be at least 1".into()));
    }
    if cfg.max_sweeps == 0 {
        return Err(SvmError::Config("--max-sweeps must be at least 1".into()));
    }
    if !(cfg.epsilon.is_finite() && cfg.epsilon >= 0.0) {
        return Err(SvmError::Config(format!("--epsilon must be ≥ 0, got {}", cfg.epsilon)));
    }
    Ok(())
}

/// Builds the reduction for `cfg` from a prepass over the data.
pub fn reduction_for(cfg: &TrainConfig) -> Result<Reduction> {
    let format: Format = cfg.format.into();
    let info = scan_dataset(&cfg.data, format)?;
    let features = info.features();
    let family = match format {
        Format::Binary => Family::Binary,
        Format::Regression => Family::Regression { epsilon: cfg.epsilon },
        Format::Grouped => Family::Grouped,
        Format::Multiclass => {
            let classes = cfg.classes.unwrap_or(info.classes());
            if info.max_class > classes {
                return Err(SvmError::parse(0, format!("label {} exceeds {classes} classes", info.max_class)));
            }
            Family::Multiclass {
                classes: classes.max(2),
            }
        }
    };
    let bias = if format == Format::Grouped { 0.0 } else { cfg.bias };
    Reduction::new(family, features, cfg.c, bias)
}

/// Trains per `cfg`, writes the model and sidecar, and returns the summary.
pub fn train(cfg: &TrainConfig, mut progress: impl FnMut(String)) -> Result<TrainSummary> {
    validate(cfg)?;
    let start = Instant::now();
    let reduction = reduction_for(cfg)?;
    let dim = reduction.weight_dim();
    let nonneg = match &cfg.nonneg {
        Some(p) => read_nonneg(p, dim)?,
        None => NonNegSpec::default(),
    };
    let prior = match &cfg.prior {
        Some(p) => Some(read_prior(p, dim)?),
        None => None,
    };
    if let Some(p) = &prior {
        if nonneg.indices().any(|k| p.w0()[k] != 0.0) {
            return Err(SvmError::Config(
                "non-negative coordinates must have prior mean 0".into(),
            ));
        }
    }
    let mut model = ModelFile::new(reduction, vec![0.0; dim], nonneg, prior)?;
    let mut source = model.source(&cfg.data)?;
    let mut state = DualState::new(dim);
    if !model.nonneg.is_empty() {
        state.set_nonneg(model.nonneg.mask(dim))?;
    }
    let batch = BatchConfig {
        tol: cfg.tol,
        max_sweeps: cfg.max_sweeps,
        seed: cfg.seed,
        ..BatchConfig::default()
    };

    let summary_of = |converged, lb, ub, state: &DualState, peak, passes| TrainSummary {
        converged,
        mode: cfg.mode,
        lb,
        ub,
        support_vectors: state.set().support_vector_count(),
        cache: state.len(),
        peak_cache: peak,
        passes,
        wall_ms: 0,
    };
    let (mut summary, state) = match cfg.mode {
        Mode::Batch => {
            for c in collect_constraints(&mut source)? {
                state.insert(c, 0.0)?;
            }
            let out = BatchSolver::new(batch).optimize(&mut state);
            progress(format!(
                "sweeps={} lb={} ub={} updates={}",
                out.sweeps, out.bounds.lb, out.bounds.ub, out.updates
            ));
            let n = state.len();
            (
                summary_of(out.converged, out.bounds.lb, out.bounds.ub, &state, n, out.sweeps),
                state,
            )
        }
        Mode::Online | Mode::Cyclic => {
            let config = OnlineConfig {
                tol: cfg.tol,
                schedule: match cfg.schedule {
                    ScheduleArg::Gap => Schedule::Gap,
                    ScheduleArg::Ratio => Schedule::FixedRatio(10),
                    ScheduleArg::Memory => Schedule::MemoryLimit,
                },
                prune: match cfg.prune {
                    PruneArg::Aggressive => PrunePolicy::Aggressive,
                    PruneArg::Lazy => PrunePolicy::Lazy(PrunePolicy::LAZY_DEFAULT),
                    PruneArg::Never => PrunePolicy::Never,
                },
                cache_cap: (cfg.cache_cap > 0).then_some(cfg.cache_cap),
                max_passes: if cfg.mode == Mode::Online { 1 } else { cfg.max_passes },
                batch,
            };
            let mut learner = OnlineLearner::with_state(state, config)?;
            let out = learner.run_cyclic_with(&mut source, |s, p| {
                progress(format!(
                    "{p} admitted={} optimizes={} refused={}",
                    s.admissions, s.optimize_calls, s.refused
                ))
            })?;
            let lb = learner.bounds().lb;
            let ub = match out.true_ub {
                Some(ub) => ub,
                None => streaming_primal(&mut source, learner.w())?,
            };
            let converged = gap_satisfied(lb, ub, cfg.tol);
            let peak = learner.peak_cache();
            let passes = out.passes;
            let state = learner.into_state();
            (summary_of(converged, lb, ub, &state, peak, passes), state)
        }
    };
    model.weights = state.w().to_vec();
    model.save(&cfg.model)?;
    DualSidecar {
        lb: summary.lb,
        ub: summary.ub,
        tol: cfg.tol,
    }
    .save(&DualSidecar::path_for(&cfg.model))?;
    summary.wall_ms = start.elapsed().as_millis();
    Ok(summary)
}

pub fn cmd_train(cfg: &TrainConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let verbose = cfg.progress;
    let summary = train(cfg, |line| {
        if verbose {
            let _ = writeln!(err, "{line}");
        }
    })?;
    let _ = writeln!(out, "{}", summary.line());
    Ok(if summary.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

pub fn cmd_predict(model_path: &Path, data: &Path, out: &mut dyn Write) -> Result<i32> {
    let model = ModelFile::load(model_path)?;
    let format = match model.reduction.family {
        Family::Binary => Format::Binary,
        Family::Multiclass { .. } => Format::Multiclass,
        Family::Regression { .. } => Format::Regression,
        Family::Grouped => Format::Grouped,
    };
    let file = std::fs::File::open(data).map_err(|e| SvmError::io(data, 0, e))?;
    let mut reader = std::io::BufReader::new(file);
    let mut line = String::new();
    let mut no = 0;
    let mut offset = 0u64;
    loop {
        line.clear();
        let n = std::io::BufRead::read_line(&mut reader, &mut line).map_err(|e| SvmError::io(data, offset, e))?;
        if n == 0 {
            break;
        }
        offset += n as u64;
        no += 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let x = match format {
            Format::Grouped => crate::io::parse_grouped_line(t, no)?.x,
            _ => crate::io::parse_labeled_line(t, format, no)?.features,
        };
        let p = model.predict(&x).map_err(|e| match e {
            SvmError::DimensionMismatch { .. } => SvmError::parse(no, e.to_string()),
            other => other,
        })?;
        let _ = writeln!(out, "{p}");
    }
    Ok(EXIT_OK)
}

/// Outcome of [`verify`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Verification {
    pub lb: f64,
    pub ub: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Streams `data` once under `model` and compares the exact objective with
/// the sidecar's lower bound. `Ok(None)` when the sidecar is missing.
pub fn verify(model_path: &Path, data: &Path, tol: f64) -> Result<Option<Verification>> {
    let model = ModelFile::load(model_path)?;
    let sidecar_path = DualSidecar::path_for(model_path);
    if !sidecar_path.exists() {
        return Ok(None);
    }
    let sidecar = DualSidecar::load(&sidecar_path)?;
    let mut source = model.source(data)?;
    let ub = streaming_primal(&mut source, &model.weights)?;
    Ok(Some(Verification {
        lb: sidecar.lb,
        ub,
        tol,
        passed: gap_satisfied(sidecar.lb, ub, tol),
    }))
}

pub fn cmd_verify(model: &Path, data: &Path, tol: f64, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(SvmError::Config(format!("--tol must be positive, got {tol}")));
    }
    match verify(model, data, tol)? {
        None => {
            let _ = writeln!(
                err,
                "unverifiable: no dual sidecar at {}",
                DualSidecar::path_for(model).display()
            );
            Ok(EXIT_UNVERIFIABLE)
        }
        Some(v) => {
            let _ = writeln!(
                out,
                "status={} lb={} ub={} gap={} tol={}",
                if v.passed { "pass" } else { "fail" },
                v.lb,
                v.ub,
                v.ub - v.lb,
                v.tol
            );
            Ok(if v.passed { EXIT_OK } else { EXIT_NOT_CONVERGED })
        }
    }
}

/// Used by `main`.
pub fn main_with_args(args: impl IntoIterator<Item = OsString>) -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(args, &mut stdout.lock(), &mut stderr.lock())
}
