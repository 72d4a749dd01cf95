//! Command-line front end: argument parsing, dispatch and exit codes.
//!
//! Exit code 0 on success, 2 when an argument or input file violates a
//! precondition, 1 when a computation fails.

mod commands;
mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub use output::Format;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

/// Accepts integers written as `100000` or `1e5`.
fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    match s.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x <= 9.007_199_254_740_992e15 => Ok(x as u64),
        _ => Err(format!("'{s}' is not a nonnegative integer")),
    }
}

#[derive(Debug, Parser)]
#[command(name = "ncprob", version, about = "Noncommutative probability experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LawName {
    Dirac,
    Bernoulli,
    Normal,
    Arcsine,
    Semicircle,
    Poisson,
    MarchenkoPastur,
    FreeMeixner,
}

#[derive(Debug, Clone, Args)]
pub struct LawArgs {
    #[arg(long, value_enum)]
    pub law: LawName,
    /// Location (mean, centre or atom position).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub center: f64,
    /// Standard deviation; overrides `--var`.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub var: f64,
    /// Bernoulli probability of +1.
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    /// Poisson or free Poisson rate.
    #[arg(long, default_value_t = 1.0)]
    pub rate: f64,
    /// Free Meixner first-level variance.
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    /// Free Meixner higher-level variance.
    #[arg(long = "meixner-c", default_value_t = 1.0)]
    pub meixner_c: f64,
    /// Free Meixner diagonal entry.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub u: f64,
}

#[derive(Debug, Clone, Args)]
pub struct DrivingArgs {
    /// Constant driving value.
    #[arg(long = "driving-constant", allow_negative_numbers = true, conflicts_with = "driving_file")]
    pub driving_constant: Option<f64>,
    /// JSON driving function (`constant`, `piecewise_constant` or `sampled`).
    #[arg(long = "driving-file", visible_alias = "driving")]
    pub driving_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MarkovAction {
    Stationary,
    Converge,
    Mrp,
    Mdp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Noise {
    Gue,
    SquaredGue,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Moments (and, for atomic or monotone/Boolean inputs, the law) of μ ★ ν.
    Convolve {
        #[arg(long)]
        kind: ncprob::convolutions::ConvolutionKind,
        /// Left law as inline JSON, e.g. '{"kind":"bernoulli","p":0.5}', or a JSON file.
        #[arg(long, visible_alias = "lhs")]
        left: String,
        #[arg(long, visible_alias = "rhs")]
        right: String,
        #[arg(long, default_value_t = 8)]
        order: usize,
        /// Emit the convolved law instead of its moments.
        #[arg(long)]
        measure: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Stieltjes inversion of a named law's Cauchy transform.
    Invert {
        #[command(flatten)]
        law: LawArgs,
        #[arg(long, default_value_t = 1201)]
        points: usize,
        #[arg(long, allow_negative_numbers = true)]
        lo: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        hi: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Loewner chain `f_t` of a driving function: its law, or values at points.
    Loewner {
        #[command(flatten)]
        driving: DrivingArgs,
        #[arg(long)]
        t: f64,
        #[arg(long, visible_alias = "grid", default_value_t = 2401)]
        points: usize,
        /// Evaluate `f_t` at `re,im` (repeatable) instead of recovering its law.
        #[arg(long, allow_negative_numbers = true)]
        eval: Vec<String>,
        #[arg(long, default_value_t = ncprob::loewner::DEFAULT_TOL)]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Sampled SLE driving function `√κ·B_t`.
    Sle {
        #[arg(long)]
        kappa: f64,
        #[arg(long, visible_alias = "T", default_value_t = 1.0)]
        horizon: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Spidernet comb-product approximation of a slit Loewner chain.
    SpidernetApprox {
        #[command(flatten)]
        driving: DrivingArgs,
        #[arg(long, visible_alias = "T", default_value_t = 2.0)]
        horizon: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        order: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Scaled moments of the n-fold convolution power of a centred law.
    Clt {
        #[arg(long)]
        kind: ncprob::convolutions::ConvolutionKind,
        #[arg(long, value_parser = parse_count)]
        n: u64,
        #[arg(long, default_value_t = 6)]
        order: usize,
        /// Base law as JSON; symmetric Bernoulli when omitted.
        #[arg(long)]
        base: Option<String>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Finite Markov chains and decision processes from a JSON spec.
    Markov {
        #[arg(value_enum)]
        action: MarkovAction,
        #[arg(long)]
        spec: PathBuf,
        /// Initial distribution for `converge`, comma separated; first state when omitted.
        #[arg(long, value_delimiter = ',')]
        initial: Option<Vec<f64>>,
        /// Value-iteration tolerance for `mdp`.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Metropolis sampling of the Ising model.
    Ising {
        #[arg(long)]
        width: usize,
        #[arg(long)]
        height: Option<usize>,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 1.0)]
        coupling: f64,
        #[arg(long, default_value_t = 0.0)]
        field: f64,
        #[arg(long, value_parser = parse_count)]
        steps: u64,
        #[arg(long)]
        seed: u64,
        /// Start from independent uniform spins instead of all up.
        #[arg(long)]
        random_start: bool,
        /// Frozen outer ring, left half down and right half up.
        #[arg(long, conflicts_with = "random_start")]
        split_boundary: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Loop-erased random walk from the origin to the boundary of a box.
    Lerw {
        #[arg(long, default_value_t = 50)]
        width: i64,
        #[arg(long = "steps-cap", value_parser = parse_count, default_value = "100000000")]
        steps_cap: u64,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// GUE spectrum and its Kolmogorov distance to the semicircle law.
    Gue {
        #[arg(long = "N", visible_alias = "size")]
        size: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Matrix AR(1) recursion driven by GUE noise.
    FreeAr1 {
        #[arg(long = "N", visible_alias = "size")]
        size: usize,
        #[arg(long)]
        steps: usize,
        #[arg(long, allow_negative_numbers = true)]
        c: f64,
        #[arg(long, value_enum, default_value_t = Noise::Gue)]
        noise: Noise,
        #[arg(long)]
        seed: u64,
        /// Include the spectrum of the last matrix.
        #[arg(long)]
        spectrum: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
}

/// Caps rayon's pool at `NCPROB_THREADS` when set.
fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("NCPROB_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Usage(format!("NCPROB_THREADS must be a positive integer, got '{raw}'")))?;
    // A pool may already exist when called twice in one process.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    configure_threads()?;
    commands::execute(cli.command, stdout)
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
