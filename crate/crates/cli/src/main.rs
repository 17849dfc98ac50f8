mod commands;
mod config;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use esnx_core::EsnError;
use serde::Serialize;

use crate::output::Format;

#[derive(Parser, Debug)]
#[command(name = "esnx", version, about = "Extended skew-normal distributions and their extremal dependence")]
struct Cli {
    /// JSON file of default flag values; flags given on the command line take precedence
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Extended skew-normal density, CDF, quantile and sampling
    Esn {
        #[command(subcommand)]
        op: EsnOp,
    },
    /// Multivariate normal density and CDF
    Mvn {
        #[command(subcommand)]
        op: MvnOp,
    },
    /// Exact and asymptotic χ(u) curves for bivariate ESN
    ChiCurve(ChiCurveArgs),
    /// Tail case, η and slowly varying factor for one bivariate ESN
    TailAsym(TailAsymArgs),
    /// Skewed Hüsler–Reiss limit model
    Hr {
        #[command(subcommand)]
        op: HrOp,
    },
    /// Triangular-array simulation of normalised maxima
    Triarray(TriarrayArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct OutArgs {
    /// Directory for output files; only stdout is written when omitted
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Comma-separated output formats
    #[arg(long, value_delimiter = ',', default_value = "csv,json,svg")]
    pub format: Vec<Format>,
    /// File name label; defaults to a UTC timestamp
    #[arg(long)]
    pub label: Option<String>,
    /// Random seed for quasi-Monte Carlo and sampling
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EsnArgs {
    /// Dimension
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    /// Upper-triangle correlations in row order (ω12,ω13,…,ω23,…); identity when omitted
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub omega: Vec<f64>,
    /// Slant vector α, one entry per dimension
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0")]
    pub alpha: Vec<f64>,
    /// Extension τ
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub tau: f64,
}

#[derive(Subcommand, Debug)]
enum EsnOp {
    /// Density at --x
    Pdf {
        #[command(flatten)]
        p: EsnArgs,
        /// Evaluation point
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        x: Vec<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// CDF at --x
    Cdf {
        #[command(flatten)]
        p: EsnArgs,
        /// Upper limits
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        x: Vec<f64>,
        /// Target absolute error, in [1e-10, 1e-2]
        #[arg(long, default_value_t = 1e-8)]
        accuracy: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Univariate quantiles at probabilities --p
    Quantile {
        #[command(flatten)]
        p: EsnArgs,
        /// Probabilities in (0, 1)
        #[arg(long = "p", value_delimiter = ',', required = true)]
        prob: Vec<f64>,
        /// Absolute tolerance on the probability scale, in [1e-10, 1e-2]
        #[arg(long, default_value_t = 1e-10)]
        accuracy: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Random draws
    Sample {
        #[command(flatten)]
        p: EsnArgs,
        /// Number of draws
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct MvnArgs {
    /// Dimension
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Upper-triangle correlations in row order; identity when omitted
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub omega: Vec<f64>,
    /// Evaluation point or upper limits
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub x: Vec<f64>,
}

#[derive(Subcommand, Debug)]
enum MvnOp {
    /// Standardised normal density
    Pdf {
        #[command(flatten)]
        p: MvnArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Lower orthant probability
    Cdf {
        #[command(flatten)]
        p: MvnArgs,
        /// Target absolute error, in [1e-10, 1e-2]
        #[arg(long, default_value_t = 1e-8)]
        accuracy: f64,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ChiCurveArgs {
    /// Correlation ω
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    pub omega: f64,
    /// Slant pairs, flattened: α1,α2[,α1,α2…]
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "2,2,3,-3,2,-4,-2,-2")]
    pub alpha: Vec<f64>,
    /// Extensions; one panel each
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-2,0,2")]
    pub tau: Vec<f64>,
    /// Explicit u values; overrides the log-spaced grid
    #[arg(long, value_delimiter = ',')]
    pub u: Vec<f64>,
    /// Smallest u of the log-spaced grid
    #[arg(long, default_value_t = 1e-6)]
    pub u_min: f64,
    /// Largest u of the log-spaced grid
    #[arg(long, default_value_t = 0.5)]
    pub u_max: f64,
    /// Number of grid points
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    /// Target absolute error of χ(u), in [1e-10, 1e-2]
    #[arg(long, default_value_t = 1e-8)]
    pub accuracy: f64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct TailAsymArgs {
    /// Correlation ω
    #[arg(long, allow_hyphen_values = true)]
    pub omega: f64,
    /// Slants α1,α2
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, num_args = 1.., required = true)]
    pub alpha: Vec<f64>,
    /// Extension τ
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub tau: f64,
    /// Tail probabilities at which exact and asymptotic χ(u) are compared
    #[arg(long, value_delimiter = ',', default_value = "1e-2,1e-3,1e-4")]
    pub u: Vec<f64>,
    /// Target absolute error of χ(u), in [1e-10, 1e-2]
    #[arg(long, default_value_t = 1e-8)]
    pub accuracy: f64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Subcommand, Debug)]
enum HrOp {
    /// Pickands dependence function curves (bivariate)
    Pickands(HrPickandsArgs),
    /// χ heat grids over (α°, τ) (bivariate)
    Chi(HrChiArgs),
    /// Ternary angular density grids (trivariate)
    Angular(HrAngularArgs),
    /// χ = 2 − L(1,1) next to the two printed closed forms
    ChiForms(HrChiFormsArgs),
    /// Evaluate L, A, h and G for one parameter set
    Eval(HrEvalArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct HrPickandsArgs {
    /// Explicit λ values; overrides the equally spaced range
    #[arg(long, value_delimiter = ',')]
    pub lambda: Vec<f64>,
    /// Smallest λ of the range
    #[arg(long, default_value_t = 0.1)]
    pub lambda_min: f64,
    /// Largest λ of the range
    #[arg(long, default_value_t = 3.0)]
    pub lambda_max: f64,
    /// Number of λ values in the range
    #[arg(long, default_value_t = 8)]
    pub lambda_count: usize,
    /// α° per panel; the model uses α° = (a, −a)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-20,0,20")]
    pub alpha_circ: Vec<f64>,
    /// τ per panel, paired with --alpha-circ
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-6,0,6")]
    pub tau: Vec<f64>,
    /// Grid points on t ∈ [0, 1]
    #[arg(long, default_value_t = 101)]
    pub points: usize,
    /// Target absolute error of A(t), in [1e-10, 1e-2]
    #[arg(long, default_value_t = 1e-9)]
    pub accuracy: f64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct HrChiArgs {
    /// λ per panel
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2.5")]
    pub lambda: Vec<f64>,
    /// Smallest α°
    #[arg(long, default_value_t = -5.0, allow_hyphen_values = true)]
    pub alpha_min: f64,
    /// Largest α°
    #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
    pub alpha_max: f64,
    /// Grid points in α°
    #[arg(long, default_value_t = 41)]
    pub alpha_points: usize,
    /// Smallest τ
    #[arg(long, default_value_t = -20.0, allow_hyphen_values = true)]
    pub tau_min: f64,
    /// Largest τ
    #[arg(long, default_value_t = 20.0, allow_hyphen_values = true)]
    pub tau_max: f64,
    /// Grid points in τ
    #[arg(long, default_value_t = 41)]
    pub tau_points: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct HrAngularArgs {
    /// λ12,λ13,λ23
    #[arg(long, value_delimiter = ',', default_value = "0.52,0.71,0.52")]
    pub lambda: Vec<f64>,
    /// One α° triple; the six documented sets are used when omitted
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub alpha_circ: Vec<f64>,
    /// τ for --alpha-circ
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub tau: f64,
    /// Simplex subdivisions; points are the interior lattice of step 1/N
    #[arg(long, default_value_t = 30)]
    pub resolution: usize,
    /// Evaluate α° sets that do not sum to zero, with a warning
    #[arg(long)]
    pub allow_invalid_alpha: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct HrChiFormsArgs {
    /// λ values
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2,3")]
    pub lambda: Vec<f64>,
    /// α° values; the model uses α° = (a, −a)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,0.5,-1,2,-3")]
    pub alpha_circ: Vec<f64>,
    /// τ values
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0")]
    pub tau: Vec<f64>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct HrEvalArgs {
    /// Upper-triangle λ in row order (λ12,λ13,…,λ23,…)
    #[arg(long, value_delimiter = ',', required = true)]
    pub lambda: Vec<f64>,
    /// α°, one per dimension, summing to zero
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub alpha_circ: Vec<f64>,
    /// τ
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub tau: f64,
    /// Point for L(z)
    #[arg(long, value_delimiter = ',')]
    pub z: Vec<f64>,
    /// Simplex point for A(t)
    #[arg(long, value_delimiter = ',')]
    pub t: Vec<f64>,
    /// Interior simplex point for h(w)
    #[arg(long, value_delimiter = ',')]
    pub w: Vec<f64>,
    /// Point for G(x)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Vec<f64>,
    /// Target absolute error, in [1e-10, 1e-2]
    #[arg(long, default_value_t = 1e-9)]
    pub accuracy: f64,
    /// Accept α° that does not sum to zero, with a warning
    #[arg(long)]
    pub allow_invalid_alpha: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct TriarrayArgs {
    /// Upper-triangle λ of the limit
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub lambda: Vec<f64>,
    /// α° of the limit
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "1,-1")]
    pub alpha_circ: Vec<f64>,
    /// τ
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    pub tau: f64,
    /// Row size n
    #[arg(long, default_value_t = 10_000)]
    pub n: u64,
    /// Number of replicated maxima
    #[arg(long, default_value_t = 10_000)]
    pub replicates: usize,
    /// Cap on scalar normal draws
    #[arg(long, default_value_t = esnx_core::triarray::DEFAULT_MAX_DRAWS)]
    pub max_draws: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(EsnError),
    Io(std::io::Error),
}

impl From<EsnError> for CliError {
    fn from(e: EsnError) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Core(e) => match e {
                EsnError::Domain(_) | EsnError::Index(_) => 2,
                EsnError::AccuracyNotReached { .. } | EsnError::NoConvergence(_) | EsnError::SingularMatrix(_) => 3,
                EsnError::ConstraintViolation { .. }
                | EsnError::InvalidLambda { .. }
                | EsnError::InvalidCorrelation(_)
                | EsnError::BoundaryCase(_) => 4,
            },
        }
    }
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("ESNX_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("ESNX_THREADS must be a non-negative integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot configure thread pool: {e}")))
}

fn run() -> Result<Option<CliError>, CliError> {
    let args = config::merge(std::env::args_os().collect()).map_err(CliError::Usage)?;
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    init_threads()?;
    let outcome = match cli.command {
        Command::Esn { op } => match op {
            EsnOp::Pdf { p, x, out } => commands::esn_pdf(&p, &x, &out)?,
            EsnOp::Cdf { p, x, accuracy, out } => commands::esn_cdf(&p, &x, accuracy, &out)?,
            EsnOp::Quantile { p, prob, accuracy, out } => commands::esn_quantile(&p, &prob, accuracy, &out)?,
            EsnOp::Sample { p, n, out } => commands::esn_sample(&p, n, &out)?,
        },
        Command::Mvn { op } => match op {
            MvnOp::Pdf { p, out } => commands::mvn_pdf(&p, &out)?,
            MvnOp::Cdf { p, accuracy, out } => commands::mvn_cdf(&p, accuracy, &out)?,
        },
        Command::ChiCurve(a) => commands::chi_curve(&a)?,
        Command::TailAsym(a) => commands::tail_asym(&a)?,
        Command::Hr { op } => match op {
            HrOp::Pickands(a) => commands::hr_pickands(&a)?,
            HrOp::Chi(a) => commands::hr_chi(&a)?,
            HrOp::Angular(a) => commands::hr_angular(&a)?,
            HrOp::ChiForms(a) => commands::hr_chi_forms(&a)?,
            HrOp::Eval(a) => commands::hr_eval(&a)?,
        },
        Command::Triarray(a) => commands::triarray(&a)?,
    };
    commands::finish(outcome)
}

fn main() -> ExitCode {
    match run() {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(e)) | Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
