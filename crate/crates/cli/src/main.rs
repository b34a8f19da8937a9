//! `bosegas`: parameter sweeps over exact ideal Bose gas statistics, written as CSV.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod output;
mod sweep;

use std::fmt;
use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sweep::Scale;

#[derive(Parser, Debug)]
#[command(name = "bosegas", version = output::VERSION, about = "Exact statistics of ideal Bose gases in harmonic traps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Ground and first excited mode populations versus temperature.
    ///
    /// Figure recipe: N0/N and N1/N against T for 1D, 2D and 3D traps,
    /// e.g. `--dim 3 --natoms 1000 --t-over-tc 0.05:1.2:60`.
    Occupations(OccupationsArgs),
    /// Sticking ratio N1/N0 versus atom number at fixed condensate fraction.
    ///
    /// Figure recipe: canonical against grand canonical N1/N0 at N0/N = 0.2,
    /// e.g. `--dim 1 --natoms 50:1600:6 --ensemble both`; grand canonical rows
    /// extend to N = 1e15.
    Sticking(StickingArgs),
    /// Quasicondensation point versus atom number.
    ///
    /// Figure recipe: T_ph/T_c and the condensate fraction at T_ph, where the
    /// coherence length equals the cloud width, e.g. `--dim 1 --natoms 100:1600:5`.
    Tph(TphArgs),
    /// N1/N0 and N2/N0 versus the trap aspect ratio w_z/w_perp.
    ///
    /// Figure recipe: N = 1000 at N0/N = 0.4 over aspect ratios 1e-4 to 1e4;
    /// `--tph-markers` adds T_ph/w_perp and T_ph/w_z, which cross 1 where
    /// k_B T_ph equals the corresponding trap quantum.
    Aspect(AspectArgs),
    /// First-order correlation g1(-x, x) and density along one trap axis.
    ///
    /// Writes x, g1 and density rows plus footer lines with the coherence
    /// length and cloud width (full widths at half maximum).
    G1(G1Args),
}

/// Trap shape; frequencies are in units of the reference frequency.
#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct TrapArgs {
    /// Isotropic trap of this dimension with unit frequencies.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    dim: Option<u8>,
    /// Axis frequencies, comma separated, one per dimension.
    #[arg(long, value_delimiter = ',', num_args = 1..=3)]
    omega: Option<Vec<f64>>,
    /// 3D trap with w_x = w_y = 1 and w_z equal to this ratio.
    #[arg(long = "aspect-ratio")]
    aspect_ratio: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Relative bound on the occupation left out of truncated spectra.
    #[arg(long = "cutoff-tol", default_value_t = 1e-12)]
    cutoff_tol: f64,
    /// Spacing of `A:B:K` ranges [default: linear for temperatures, log for N and aspect ratios].
    #[arg(long, value_enum)]
    scale: Option<Scale>,
    /// Largest atom number accepted by the canonical recursion.
    #[arg(long = "canonical-cap", default_value_t = 1600)]
    canonical_cap: u64,
}

/// Temperature given directly, relative to T_c, or through N0/N.
/// Each accepts a value, a comma list or an `A:B:K` range.
#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct TemperatureArgs {
    /// Absolute temperature in units of the trap quantum.
    #[arg(long)]
    temp: Option<String>,
    /// Temperature as a multiple of the characteristic temperature.
    #[arg(long = "t-over-tc")]
    t_over_tc: Option<String>,
    /// Temperature solved so that N0/N equals this fraction.
    #[arg(long = "n0-frac")]
    n0_frac: Option<String>,
}

#[derive(Args, Debug)]
struct OccupationsArgs {
    #[command(flatten)]
    trap: TrapArgs,
    #[arg(long, default_value = "1000")]
    natoms: String,
    #[command(flatten)]
    temperature: TemperatureArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum EnsembleChoice {
    Canonical,
    Grand,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum GcModeChoice {
    /// Thermodynamic-limit closed forms.
    Closed,
    /// Numerical fugacity over the discrete spectrum.
    Exact,
}

#[derive(Args, Debug)]
struct StickingArgs {
    #[command(flatten)]
    trap: TrapArgs,
    #[arg(long, default_value = "50:1600:6")]
    natoms: String,
    /// Condensate fraction N0/N held fixed.
    #[arg(long = "n0-frac", default_value_t = 0.2)]
    n0_frac: f64,
    #[arg(long, value_enum, default_value_t = EnsembleChoice::Both)]
    ensemble: EnsembleChoice,
    #[arg(long = "gc-mode", value_enum, default_value_t = GcModeChoice::Closed)]
    gc_mode: GcModeChoice,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct TphArgs {
    #[command(flatten)]
    trap: TrapArgs,
    #[arg(long, default_value = "100:1600:5")]
    natoms: String,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct AspectArgs {
    /// Aspect ratios w_z/w_perp as a value, list or `A:B:K` range.
    #[arg(long = "aspect-ratio", default_value = "1e-4:1e4:161")]
    aspect_ratio: String,
    #[arg(long, default_value_t = 1000)]
    natoms: u64,
    #[arg(long = "n0-frac", default_value_t = 0.4)]
    n0_frac: f64,
    /// Also locate T_ph for every trap (slow).
    #[arg(long = "tph-markers")]
    tph_markers: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum AxisChoice {
    X,
    Y,
    Z,
}

#[derive(Args, Debug)]
struct G1Args {
    #[command(flatten)]
    trap: TrapArgs,
    #[arg(long, default_value_t = 1000)]
    natoms: u64,
    #[command(flatten)]
    temperature: TemperatureArgs,
    /// Axis of the cut [default: the softest axis].
    #[arg(long, value_enum)]
    axis: Option<AxisChoice>,
    /// Grid half-width in oscillator lengths; disables automatic widening.
    #[arg(long = "grid-extent")]
    grid_extent: Option<f64>,
    /// Odd number of grid points; disables automatic widening.
    #[arg(long = "grid-points")]
    grid_points: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numerical(String),
    Io(io::Error),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Io(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "{m}"),
            Failure::Numerical(m) => write!(f, "{m}"),
            Failure::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<bosegas::Error> for Failure {
    fn from(e: bosegas::Error) -> Self {
        match e {
            bosegas::Error::InvalidArgument(m) => Failure::Usage(m),
            other => Failure::Numerical(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("BOSE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Failure::Usage(format!("BOSE_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(format!("cannot configure {n} threads: {e}")))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Occupations(a) => commands::occupations(a),
        Command::Sticking(a) => commands::sticking(a),
        Command::Tph(a) => commands::tph(a),
        Command::Aspect(a) => commands::aspect(a),
        Command::G1(a) => commands::g1(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
