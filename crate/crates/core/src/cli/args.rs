use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "orbit-transport",
    version,
    about = "Monge-Kantorovich transport, majorization and double-bracket flows"
)]
pub struct Cli {
    /// Directory for reports, traces and the run manifest.
    #[arg(long, global = true, env = "ORBIT_TRANSPORT_OUT")]
    pub out_dir: Option<PathBuf>,

    /// Seed for generated instances.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Override the command's default tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Discrete transport solvers.
    #[command(subcommand)]
    Ot(OtCommand),
    /// Majorization tests, T-transform chains and Birkhoff decompositions.
    #[command(subcommand)]
    Major(MajorCommand),
    /// Diagonal/spectrum correspondence.
    #[command(subcommand, name = "schur-horn")]
    SchurHorn(SchurHornCommand),
    /// Isospectral flows.
    #[command(subcommand)]
    Flow(FlowCommand),
    /// Grid functions on the annulus.
    #[command(subcommand)]
    Annulus(AnnulusCommand),
    /// Seeded batch checks with deterministic reports.
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Write a random or structured instance as JSON.
    Generate(GenerateArgs),
}

#[derive(Debug, Subcommand)]
pub enum OtCommand {
    /// Solve `{"cost": [[...]], "mu_plus": [...], "mu_minus": [...]}`; marginals default to uniform.
    Solve {
        #[arg(long, value_enum, default_value_t = Problem::All)]
        problem: Problem,
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Problem {
    Monge,
    Kantorovich,
    Dual,
    All,
}

#[derive(Debug, Subcommand)]
pub enum MajorCommand {
    /// Test `x ≺ y`.
    Check(PairArgs),
    /// T-transform chain realizing `x = P y`.
    Transform(PairArgs),
    /// Decompose a doubly stochastic matrix (JSON nested array) into permutations.
    Birkhoff {
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct PairArgs {
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    pub x: Vec<f64>,
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    pub y: Vec<f64>,
}

#[derive(Debug, Subcommand)]
pub enum SchurHornCommand {
    /// Diagonal, spectrum and doubly stochastic witness of a Hermitian matrix
    /// given as `{"n", "re", "im"}`.
    Project {
        #[arg(long)]
        input: PathBuf,
    },
    /// Real symmetric matrix with the given spectrum and diagonal.
    Construct {
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        spectrum: Vec<f64>,
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        diag: Vec<f64>,
    },
}

#[derive(Debug, Subcommand)]
pub enum FlowCommand {
    /// Integrate `L' = s [L, [L, N]]` from a random point of the orbit of `i diag(spectrum)`
    /// toward `N = i diag(target)`.
    Bracket(BracketArgs),
}

#[derive(Debug, Args)]
pub struct BracketArgs {
    /// Size when spectrum or target is generated.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub spectrum: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub target: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.05)]
    pub step: f64,
    #[arg(long, default_value_t = 100.0)]
    pub t_end: f64,
    /// `auto`, `1` or `-1`.
    #[arg(long, default_value = "auto", allow_hyphen_values = true)]
    pub direction: String,
    #[arg(long, default_value_t = 1)]
    pub sample_every: usize,
}

#[derive(Debug, Subcommand)]
pub enum AnnulusCommand {
    /// Spectral profile and sorting map of a grid function.
    Rearrange(GridInput),
    /// Test `π(x) ≺ λ`.
    Schur(GridInput),
    /// Lay a grid's values out so that the θ-average follows a target step function.
    Horn {
        #[arg(long)]
        input: PathBuf,
        /// Step function JSON with one segment per z-row; defaults to the θ-average of the input.
        #[arg(long)]
        target: Option<PathBuf>,
    },
    /// Minimizer of `-<x, z>` over cell permutations.
    Monge(GridInput),
    /// Saturating dual candidate for a profile and a rearrangement `alpha`.
    Dual {
        /// Profile as step function JSON.
        #[arg(long)]
        input: PathBuf,
        /// Defaults to the nonincreasing rearrangement of the profile.
        #[arg(long)]
        alpha: Option<PathBuf>,
    },
    /// Integrate `x_t = s J(x, J(x, z))`.
    Flow(PdeArgs),
    /// Upwind solution of `ρ_t + ρ_z = 0`.
    Advect {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        step: f64,
        #[arg(long)]
        t_end: f64,
    },
}

#[derive(Debug, Args)]
pub struct GridInput {
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct PdeArgs {
    /// Grid JSON; when absent, `z + a sin(2πθ) sin(πz)` on an `nz x ntheta` grid.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 64)]
    pub nz: usize,
    #[arg(long, default_value_t = 64)]
    pub ntheta: usize,
    #[arg(long, default_value_t = 0.05)]
    pub amplitude: f64,
    /// Defaults to a fifth of the explicit stability limit.
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long, default_value_t = 0.3)]
    pub t_end: f64,
    /// `1` or `-1`; `-1` relaxes increasing data toward its sorted state.
    #[arg(long, default_value = "-1", allow_hyphen_values = true)]
    pub direction: String,
    #[arg(long, value_enum, default_value_t = SchemeArg::Centered)]
    pub scheme: SchemeArg,
    #[arg(long, default_value_t = 10)]
    pub sample_every: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Centered,
    Conservative,
}

#[derive(Debug, Subcommand)]
pub enum VerifyCommand {
    /// Monge, Kantorovich and dual values agree on random square costs.
    #[command(name = "m-k-d")]
    Mkd {
        /// Fixed size; drawn from 2..=8 per instance when absent.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 200)]
        instances: usize,
    },
    /// Schur projections and Horn constructions round-trip.
    #[command(name = "schur-horn")]
    SchurHorn {
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[arg(long, default_value_t = 12)]
        max_n: usize,
    },
    /// Double-bracket limits are the similarly ordered diagonal.
    #[command(name = "flow-limit")]
    FlowLimit {
        #[arg(long, default_value_t = 50)]
        instances: usize,
        #[arg(long, default_value_t = 0.05)]
        step: f64,
    },
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub kind: InstanceKind,
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    /// Columns of a rectangular cost; defaults to `n`.
    #[arg(long)]
    pub cols: Option<usize>,
    /// Orbit spectrum `λ`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub spectrum: Option<Vec<f64>>,
    /// Orbit target diagonal.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub target: Option<Vec<f64>>,
    /// Number of permutations mixed into a doubly stochastic matrix.
    #[arg(long)]
    pub terms: Option<usize>,
    #[arg(long, default_value_t = 16)]
    pub nz: usize,
    #[arg(long, default_value_t = 16)]
    pub ntheta: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum InstanceKind {
    Cost,
    Orbit,
    Ds,
    Grid,
}
