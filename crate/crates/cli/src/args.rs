use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "sse-lab", version, about = "Two oscillators coupled to a finite bath: spectra, dynamics and ratio sweeps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Head-component profiles of the eigenbasis and their peak features.
    Eigenprofile(EigenprofileArgs),
    /// Averaged amplitude ratio against the head-head coupling.
    RatioSweep(SweepArgs),
    /// Ratio sweeps at several bath sizes and the sharpness of the transition.
    ScalingStudy(ScalingArgs),
    /// Full finite-bath dynamics against the reduced two-mode model.
    NhCompare(NhCompareArgs),
    /// Noise-driven spectra of the reduced model and their split onset.
    NoiseSpectrum(NoiseArgs),
    /// Full ratio next to each approximate estimator.
    Estimator(SweepArgs),
    /// Re-runs a previous run from its manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Flat `key = value` file with any of n_bath, delta_omega, g, omega_big, omega0.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Bath size. Alone, rescales the default model keeping gamma and the band width.
    #[arg(long)]
    pub n_bath: Option<usize>,
    /// Bath level spacing.
    #[arg(long)]
    pub delta_omega: Option<f64>,
    /// Coupling of oscillator 1 to each bath mode.
    #[arg(long)]
    pub g: Option<f64>,
    /// Carrier frequency; 0 is the rotating frame.
    #[arg(long)]
    pub omega0: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OmegaUnit {
    /// Multiples of gamma / sqrt(2).
    Sse,
    /// Absolute angular frequency.
    Abs,
}

#[derive(Debug, Clone, Args)]
pub struct OmegaArgs {
    /// Comma-separated couplings.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub omega: Vec<f64>,
    /// `lo:hi:points`, inclusive and evenly spaced.
    #[arg(long, conflicts_with = "omega")]
    pub omega_grid: Option<String>,
    /// Unit of --omega and --omega-grid.
    #[arg(long, value_enum, default_value_t = OmegaUnit::Sse)]
    pub omega_unit: OmegaUnit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitMode {
    Random,
    Unit,
    Eigenplus,
}

#[derive(Debug, Clone, Args)]
pub struct EnsembleArgs {
    /// Averaging horizon in return times.
    #[arg(long)]
    pub t_max_tr: Option<f64>,
    /// Number of random-phase initial states.
    #[arg(long, default_value_t = 200)]
    pub ensemble: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = InitMode::Random)]
    pub init: InitMode,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    /// Also write SVG line plots.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Clone, Args)]
pub struct EigenprofileArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub omega: OmegaArgs,
    /// Bath sizes, each reached with the gamma-preserving rescaling.
    #[arg(long, value_delimiter = ',')]
    pub n_list: Vec<usize>,
    /// Use the dense reference eigensolver.
    #[arg(long)]
    pub dense: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub omega: OmegaArgs,
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ScalingArgs {
    #[command(flatten)]
    pub sweep: SweepArgs,
    #[arg(long, value_delimiter = ',', default_values_t = vec![50, 100, 200, 400])]
    pub n_list: Vec<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct NhCompareArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Coupling of the trajectory comparison, in --omega-unit.
    #[arg(long, default_value_t = 0.5)]
    pub omega: f64,
    /// Couplings of the ratio overlay.
    #[arg(long)]
    pub omega_grid: Option<String>,
    #[arg(long, value_enum, default_value_t = OmegaUnit::Sse)]
    pub omega_unit: OmegaUnit,
    /// Trajectory length in return times.
    #[arg(long, default_value_t = 3.0)]
    pub t_max_tr: f64,
    /// Trajectory samples.
    #[arg(long, default_value_t = 3000)]
    pub samples: usize,
    /// Averaging horizon of the ratio overlay, in return times.
    #[arg(long, default_value_t = 10.0)]
    pub ratio_t_max_tr: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct NoiseArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub omega: OmegaArgs,
    /// Noise temperature; must be positive.
    #[arg(long, default_value_t = 1.0)]
    pub temperature: f64,
    /// Independent noise realizations averaged per spectrum.
    #[arg(long, default_value_t = 64)]
    pub realizations: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Simulated time in units of 1/gamma.
    #[arg(long, default_value_t = 400.0)]
    pub t_max_gamma: f64,
    /// Euler-Maruyama step; by default half the stability limit at the largest coupling.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Bisection bracket `lo:hi` in --omega-unit.
    #[arg(long, default_value = "0.5:1.5")]
    pub bisect: String,
    /// Bisection width in units of gamma / sqrt(2).
    #[arg(long, default_value_t = 0.01)]
    pub tol: f64,
    #[arg(long)]
    pub no_bisect: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct RerunArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Defaults to the directory holding the manifest.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}
