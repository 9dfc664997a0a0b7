use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

/// Standing waves, spectra and dynamics of the logarithmic NLS on a tadpole graph.
#[derive(Debug, Parser)]
#[command(name = "nlslog", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Overrides,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the standing wave and write its samples and functionals.
    Profile,
    /// Tabulate the period function and its derivative.
    PeriodScan,
    /// Lowest eigenvalues of a linearized operator or of -Δ_Z.
    Spectrum,
    /// Evolve the perturbed standing wave and record mass, energy and distance.
    Evolve,
    /// Orbital stability experiment: sup of the distance to the orbit.
    Stability,
    /// Run the verification suite; exits nonzero if any check fails.
    VerifyAll {
        /// Run only these checks (comma separated ids, 1 to 13).
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
    },
}

/// Flags overriding the defaults and the `--config` file.
#[derive(Debug, Args)]
pub struct Overrides {
    /// JSON run configuration; flags take precedence over its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Frequency.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub c: Option<f64>,
    /// Ring half-length.
    #[arg(long = "L", global = true)]
    pub l: Option<f64>,
    /// Vertex strength (only for the Laplacian).
    #[arg(long = "Z", global = true, allow_hyphen_values = true)]
    pub z: Option<f64>,
    /// Grid spacing.
    #[arg(long, global = true)]
    pub h: Option<f64>,
    /// Number of ring cells.
    #[arg(long, global = true)]
    pub grid_ring: Option<usize>,
    /// Number of half-line cells.
    #[arg(long, global = true)]
    pub grid_tail: Option<usize>,
    /// Half-line truncation length.
    #[arg(long = "R", global = true)]
    pub r: Option<f64>,
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    #[arg(long, global = true)]
    pub t_end: Option<f64>,
    /// Perturbation size.
    #[arg(long, global = true)]
    pub eta: Option<f64>,
    /// Truncation level of the logarithm.
    #[arg(long, global = true)]
    pub n_trunc: Option<f64>,
    /// Seed of the ChaCha8 generator used for perturbations.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// l1, l2, laplacian, periodic-ring or neumann-half-line.
    #[arg(long, global = true)]
    pub operator: Option<String>,
    /// Number of eigenpairs.
    #[arg(long, global = true)]
    pub pairs: Option<usize>,
    /// Scan start.
    #[arg(long, global = true)]
    pub from: Option<f64>,
    /// Scan end.
    #[arg(long, global = true)]
    pub to: Option<f64>,
    /// Scan points.
    #[arg(long, global = true)]
    pub points: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, env = "NLSLOG_OUT_DIR")]
    pub out: Option<PathBuf>,
    /// What to print on stdout: json or csv.
    #[arg(long, global = true)]
    pub format: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    commands::dispatch(cli.command, &cli.opts)
}
