use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod artifacts;
mod commands;

/// Few-projection tomography as QUBO: phantom → sinogram → QUBO → anneal → image.
///
/// Every command reads and writes plain files inside `--dir` and records its
/// parameters in a provenance JSON next to its outputs.
#[derive(Parser, Debug)]
#[command(name = "tomoqubo", version, about, long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate or prepare a quantized phantom (phantom.csv, phantom.pgm).
    Phantom(PhantomArgs),
    /// Forward-project an image into a sinogram, optionally with noise.
    Project(ProjectArgs),
    /// Assemble the combined QUBO a·Q1 + b·Q2 from a sinogram.
    Build(BuildArgs),
    /// Minimize a QUBO by annealing, or exhaustively with --exact.
    Solve(SolveArgs),
    /// Decode a solver bitstring back into an image.
    Reconstruct(ReconstructArgs),
    /// Run a classical reconstruction (FBP or SART).
    Baseline(BaselineArgs),
    /// Score every reconstruction in the directory against the phantom.
    Compare(CompareArgs),
}

#[derive(Args, Debug)]
struct DirArg {
    /// Working directory for all artifacts.
    #[arg(long, default_value = ".")]
    dir: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum PhantomKind {
    SheppLogan,
    Image,
}

#[derive(Args, Debug)]
struct PhantomArgs {
    #[command(flatten)]
    dir: DirArg,
    #[arg(long, value_enum, default_value = "shepp-logan")]
    kind: PhantomKind,
    /// Output side length in pixels.
    #[arg(long)]
    size: usize,
    /// Comma-separated MAC levels, strictly increasing and positive.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    levels: Vec<f64>,
    /// Gaussian blur sigma in output pixels.
    #[arg(long, default_value_t = 0.0)]
    blur: f64,
    /// One threshold per level on the blurred values; defaults to midpoints
    /// on the min-max normalized image.
    #[arg(long, value_delimiter = ',')]
    thresholds: Option<Vec<f64>>,
    /// Source image for `--kind image` (.pgm or .csv).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Raster size of the analytic phantom before resizing.
    #[arg(long, default_value_t = 128)]
    source_size: usize,
}

#[derive(Args, Debug)]
struct ProjectArgs {
    #[command(flatten)]
    dir: DirArg,
    /// Image to project (.csv or .pgm); defaults to <dir>/phantom.csv.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Number of equally spaced angles over [0, 180).
    #[arg(long)]
    projections: usize,
    /// Detector bins; defaults to full diagonal coverage.
    #[arg(long)]
    bins: Option<usize>,
    /// Detector bin width in pixels (requires --bins).
    #[arg(long, requires = "bins")]
    bin_width: Option<f64>,
    /// Relative Gaussian noise level; also writes sinogram_noisy.csv.
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Encoding {
    MacDifference,
    Mac,
    Radix2,
}

#[derive(Args, Debug)]
struct BuildArgs {
    #[command(flatten)]
    dir: DirArg,
    /// Sinogram CSV; defaults to <dir>/sinogram.csv.
    #[arg(long)]
    sinogram: Option<PathBuf>,
    /// Geometry JSON; defaults to <dir>/geometry.json.
    #[arg(long)]
    geometry: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "mac-difference")]
    encoding: Encoding,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    levels: Vec<f64>,
    /// Weight of the projection-fidelity term.
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Weight of the total-variation term.
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    /// Ground-truth phantom; when given, the target energy is recorded.
    #[arg(long)]
    phantom: Option<PathBuf>,
    /// Artifact label; defaults to `qtr` when b = 0 and `qcstr` otherwise.
    #[arg(long)]
    label: Option<String>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    dir: DirArg,
    #[arg(long, default_value = "qcstr")]
    label: String,
    /// Exhaustive search (at most 24 variables).
    #[arg(long)]
    exact: bool,
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    #[arg(long, default_value_t = 2000)]
    sweeps: usize,
    /// Initial temperature; derived from the model when omitted.
    #[arg(long)]
    t0: Option<f64>,
    /// Final temperature; derived from the model when omitted.
    #[arg(long)]
    tf: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; defaults to available parallelism.
    #[arg(long)]
    threads: Option<usize>,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Record elapsed time in solve JSON (makes output non-reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Args, Debug)]
struct ReconstructArgs {
    #[command(flatten)]
    dir: DirArg,
    #[arg(long, default_value = "qcstr")]
    label: String,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum BaselineMethod {
    Fbp,
    Sart,
}

#[derive(Args, Debug)]
struct BaselineArgs {
    #[command(flatten)]
    dir: DirArg,
    #[arg(long, value_enum)]
    method: BaselineMethod,
    /// Sinogram CSV; defaults to <dir>/sinogram.csv.
    #[arg(long)]
    sinogram: Option<PathBuf>,
    /// Geometry JSON; defaults to <dir>/geometry.json.
    #[arg(long)]
    geometry: Option<PathBuf>,
    /// SART iterations.
    #[arg(long, default_value_t = 6)]
    iterations: usize,
    /// SART relaxation factor in (0, 2].
    #[arg(long, default_value_t = 1.0)]
    relaxation: f64,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    dir: DirArg,
    /// Ground truth; defaults to <dir>/phantom.csv.
    #[arg(long)]
    phantom: Option<PathBuf>,
    /// Row label in the report; defaults to "<n> projections".
    #[arg(long)]
    scenario: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Phantom(a) => commands::phantom(a),
        Command::Project(a) => commands::project(a),
        Command::Build(a) => commands::build(a),
        Command::Solve(a) => commands::solve(a),
        Command::Reconstruct(a) => commands::reconstruct(a),
        Command::Baseline(a) => commands::baseline(a),
        Command::Compare(a) => commands::compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(artifacts::exit_code(&err))
        }
    }
}
