use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "eigenoverlap", version, about = "Moment-based bounds on eigenstate overlaps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute a moment vector and check its Hankel consistency.
    Moments(MomentsArgs),
    /// Optimal lower and upper bounds for one system.
    Bound(BoundArgs),
    /// Long-form bound table across several systems.
    Sweep(SweepArgs),
    /// Generate a cluster model as spectral JSON.
    GenModel(GenModelArgs),
    /// Closed-form first-order and literature bounds.
    Classic(ClassicArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Hamiltonian matrix: first line n, then n rows of n numbers.
    #[arg(long, requires = "state", conflicts_with = "spectrum")]
    pub matrix: Option<PathBuf>,
    /// Trial state: one amplitude per line.
    #[arg(long, requires = "matrix")]
    pub state: Option<PathBuf>,
    /// Spectral JSON with eigenvalues and overlaps.
    #[arg(long)]
    pub spectrum: Option<PathBuf>,
    /// Levels whose overlap falls below this are dropped from matrix input.
    #[arg(long, default_value_t = 1e-20)]
    pub overlap_floor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WindowPolicy {
    /// Spectrum range for exact grids, Gershgorin otherwise.
    Auto,
    Gershgorin,
    Lanczos,
    Spectrum,
}

impl WindowPolicy {
    pub fn name(self) -> &'static str {
        match self {
            WindowPolicy::Auto => "auto",
            WindowPolicy::Gershgorin => "gershgorin",
            WindowPolicy::Lanczos => "lanczos",
            WindowPolicy::Spectrum => "spectrum",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct WindowArgs {
    /// How the rescaling window [E_L, E_U] is chosen.
    #[arg(long, value_enum, default_value_t = WindowPolicy::Auto)]
    pub window: WindowPolicy,
    /// Explicit window "LO,HI"; overrides --window.
    #[arg(long, value_name = "LO,HI", allow_hyphen_values = true)]
    pub window_range: Option<String>,
    #[arg(long, default_value_t = 30)]
    pub lanczos_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BasisArg {
    Chebyshev,
    Monomial,
}

impl From<BasisArg> for eigenoverlap::Basis {
    fn from(b: BasisArg) -> Self {
        match b {
            BasisArg::Chebyshev => eigenoverlap::Basis::Chebyshev,
            BasisArg::Monomial => eigenoverlap::Basis::Monomial,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    /// Constraints at the known eigenvalues.
    Exact,
    /// Constraints on energy windows around each eigenvalue estimate.
    Intervals,
}

#[derive(Debug, Clone, Args)]
pub struct TargetArgs {
    /// Target level indices, e.g. "0" or "0,2".
    #[arg(long, default_value = "0", conflicts_with = "threshold")]
    pub targets: String,
    /// Weights v_i, one per target (default 1).
    #[arg(long)]
    pub weights: Option<String>,
    /// Target every level below this energy (cumulative overlap).
    #[arg(long, value_name = "E_CLASS", allow_hyphen_values = true)]
    pub threshold: Option<f64>,
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 0.3)]
    pub gamma_lo: f64,
    #[arg(long, default_value_t = 0.3)]
    pub gamma_hi: f64,
    #[arg(long, default_value_t = 20)]
    pub target_points: usize,
    #[arg(long, default_value_t = 200)]
    pub complement_points: usize,
    #[arg(long, default_value_t = 200)]
    pub threshold_points: usize,
}

#[derive(Debug, Clone, Args)]
pub struct CertifyArgs {
    #[arg(long, default_value_t = 2)]
    pub refine_factor: usize,
    #[arg(long, default_value_t = 8)]
    pub max_retries: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub certify_tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct MomentsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub window: WindowArgs,
    #[arg(long)]
    pub degree: usize,
    /// Monomial moments are raw unless --window-range is given.
    #[arg(long, value_enum, default_value_t = BasisArg::Chebyshev)]
    pub basis: BasisArg,
    /// JSON output path.
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct BoundArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Precomputed moment JSON; energies still come from --spectrum or --matrix.
    #[arg(long)]
    pub moments: Option<PathBuf>,
    #[command(flatten)]
    pub window: WindowArgs,
    #[command(flatten)]
    pub target: TargetArgs,
    #[command(flatten)]
    pub certify: CertifyArgs,
    /// Degrees, e.g. "1-8" or "1,2,4".
    #[arg(long, default_value = "1-8")]
    pub degrees: String,
    #[arg(long, value_enum, default_value_t = BasisArg::Chebyshev)]
    pub basis: BasisArg,
    /// CSV output path; the JSON sidecar goes next to it.
    #[arg(long, short)]
    pub output: PathBuf,
    /// Sidecar path (default: output with a .json extension).
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Spectral JSON files, one system each.
    #[arg(long, num_args = 1.., conflicts_with = "gaps")]
    pub spectrum: Vec<PathBuf>,
    /// Generate one cluster model per gap, e.g. "0.05,0.1,0.2,0.4".
    #[arg(long)]
    pub gaps: Option<String>,
    #[arg(long, default_value_t = 0.2, allow_hyphen_values = true)]
    pub center2: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub window: WindowArgs,
    #[command(flatten)]
    pub target: TargetArgs,
    #[command(flatten)]
    pub certify: CertifyArgs,
    #[arg(long, default_value = "1-8")]
    pub degrees: String,
    #[arg(long, value_enum, default_value_t = BasisArg::Chebyshev)]
    pub basis: BasisArg,
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct GenModelArgs {
    /// Centre of the second cluster.
    #[arg(long, default_value_t = 0.2, allow_hyphen_values = true)]
    pub center2: f64,
    /// Place the background on [-1 + gap, 1] instead of [-0.9, 1].
    #[arg(long)]
    pub gap: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ClassicArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub mean: Option<f64>,
    /// ⟨Ĥ²⟩.
    #[arg(long, allow_hyphen_values = true)]
    pub second: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub e0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub e1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub ed: Option<f64>,
    /// Also write the table as JSON.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}
