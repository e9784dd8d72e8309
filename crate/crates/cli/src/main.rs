use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

use commands::CliError;

const CSV_SCHEMA: &str = "\
Trajectory CSV schema:
  line 1   '# ' followed by one line of JSON metadata
           {kind, n, config, gauge, samples, unitary, charges?}
  line 2   header: t, then Re_Zij,Im_Zij for every entry in row-major order
           (Re_Uij,Im_Uij for geodesics), then H, det_ZZ
  rest     one row per sample; H is the energy, det_ZZ is det(Z†Z)
Floats are written in shortest round-trip form.

With --mode both, OUT=run.csv produces run.numeric.csv, run.closed_form.csv
and run.summary.json; the summary is also printed to stdout.

Chain configuration (--spec FILE):
  {\"p\": [..], \"levels\": [α₂, …, αₙ]}   nested couplings α_ij = α_max(i,j)
  {\"p\": [..], \"alpha\": [[..], ..]}       full symmetric coupling matrix
  optional \"z0\": {\"re\": [[..]], \"im\": [[..]]}, columns normalized to p
Without --spec, --n N uses p = 1, levels 1, 2, …, N−1 and a seeded random Z0.";

#[derive(Parser, Debug)]
#[command(
    name = "coadjoint",
    version,
    about = "Coadjoint orbits, Lagrangian embeddings and spin-chain geodesics"
)]
#[command(after_help = "Exit codes: 0 ok, 2 parse error, 3 invariant violated, 4 numerical failure.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Orbit, stabilizer and algebra dimensions of a Cartan element.
    OrbitInfo(OrbitInfoArgs),
    /// Certify a product embedding: dimension tally, isotropy, moment residual.
    CheckEmbedding(CheckEmbeddingArgs),
    /// Integrate the classical spin chain and export Z(t).
    #[command(after_help = CSV_SCHEMA)]
    Simulate(TrajectoryArgs),
    /// Export the magnetic geodesic U(t), the polar part of Z(t).
    #[command(after_help = CSV_SCHEMA)]
    Geodesic(TrajectoryArgs),
    /// Zero level of α n₁ + β n₂ + γ n₃ on three spheres.
    Triangle(TriangleArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GroupArg {
    Su,
    SoEven,
    SoOdd,
    Sp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Builtin {
    SuGrassmann,
    SoUpsilon,
    So6Lagrangian,
    TwoStepSo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Numeric,
    #[value(name = "closed_form", alias = "closed-form")]
    ClosedForm,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Write here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overwrite existing output files.
    #[arg(long)]
    pub force: bool,
}

#[derive(Args, Debug)]
pub struct OrbitInfoArgs {
    #[arg(long, value_enum)]
    pub group: GroupArg,
    /// Rank parameter: SU(n), SO(2n), SO(2n+1) or Sp(n). Multiplicities sum to n.
    #[arg(long)]
    pub n: usize,
    /// Block multiplicities, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub mult: Vec<usize>,
    /// Block eigenvalues; defaults to 1, 2, … (centered to trace zero for SU).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub eig: Option<Vec<f64>>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct CheckEmbeddingArgs {
    /// JSON embedding spec.
    #[arg(long, conflicts_with = "builtin", required_unless_present = "builtin")]
    pub spec: Option<PathBuf>,
    /// Named example spec.
    #[arg(long, value_enum)]
    pub builtin: Option<Builtin>,
    /// Group for so-upsilon.
    #[arg(long, value_enum, default_value = "so-even")]
    pub group: GroupArg,
    /// Rank parameter for su-grassmann, so-upsilon and two-step-so.
    #[arg(long)]
    pub n: Option<usize>,
    /// Multiplicities for su-grassmann and so-upsilon.
    #[arg(long, value_delimiter = ',')]
    pub mult: Option<Vec<usize>>,
    #[arg(long, default_value_t = 50)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Isotropy tolerance.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct TrajectoryArgs {
    /// JSON chain configuration.
    #[arg(long, conflicts_with = "n")]
    pub spec: Option<PathBuf>,
    /// Number of spins for the default configuration.
    #[arg(long, required_unless_present = "spec")]
    pub n: Option<usize>,
    /// Seed for the random initial state when the configuration has no z0.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, value_enum, default_value = "numeric")]
    pub mode: Mode,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Agreement tolerance between numeric and closed-form trajectories.
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct TriangleArgs {
    /// Weights α,β,γ.
    #[arg(
        long,
        alias = "weights",
        value_delimiter = ',',
        num_args = 1,
        required = true,
        allow_hyphen_values = true
    )]
    pub eig: Vec<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::OrbitInfo(a) => commands::orbit_info(&a),
        Command::CheckEmbedding(a) => commands::check_embedding(&a),
        Command::Simulate(a) => commands::trajectory(&a, commands::Kind::SpinChain),
        Command::Geodesic(a) => commands::trajectory(&a, commands::Kind::Geodesic),
        Command::Triangle(a) => commands::triangle(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError { code, message }) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
