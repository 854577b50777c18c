//! `fdoa-locus` command-line tool.
//!
//! Exit codes: 0 success (an empty intersection is a success), 2 infeasible
//! measurement, 3 I/O failure, 4 invalid configuration or arguments.

mod commands;
mod config;
mod output;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug)]
pub enum CliError {
    Infeasible(String),
    Io(String),
    Config(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Infeasible(_) => 2,
            CliError::Io(_) => 3,
            CliError::Config(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Infeasible(m) => write!(f, "infeasible measurement: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Config(m) => write!(f, "configuration error: {m}"),
        }
    }
}

/// Candidate emitter loci from a single Doppler-shift measurement.
///
/// Scenario files are JSON. All angles are degrees, heights and distances
/// metres, speeds m/s and frequencies Hz.
#[derive(Debug, Parser)]
#[command(name = "fdoa-locus", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario file (JSON).
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Print the report as JSON.
    #[arg(long)]
    pub json: bool,
    /// Directory for output files.
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    /// Generator rays swept around the cone (overrides the config).
    #[arg(long, value_name = "N")]
    pub samples: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the Doppler cone and report apex, axis and semi-angle.
    Cone {
        #[command(flatten)]
        common: Common,
        /// Force the semi-angle (degrees).
        #[arg(long, value_name = "DEG")]
        semi_angle: Option<f64>,
    },
    /// Intersect the cone with the WGS84 ellipsoid and write the curves.
    Intersect {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "DEG")]
        semi_angle: Option<f64>,
    },
    /// Map the ellipsoid curve onto the configured terrain tile.
    Terrain {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "DEG")]
        semi_angle: Option<f64>,
    },
    /// Distance from the curve of one scenario to that of another.
    Shift {
        #[command(flatten)]
        common: Common,
        /// Second scenario file.
        #[arg(long, value_name = "PATH")]
        config_b: PathBuf,
        /// Also write per-point distances as CSV.
        #[arg(long)]
        detail: bool,
        /// Compare only the visible (near-side) parts of the curves.
        #[arg(long)]
        visible_only: bool,
    },
    /// Write a synthetic terrain tile.
    GenTile(GenTileArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TileKind {
    Flat,
    Plateau,
    Ridge,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TileFormat {
    Dted,
    Portable,
}

#[derive(Debug, Args)]
pub struct GenTileArgs {
    #[arg(long, value_enum)]
    pub kind: TileKind,
    /// DTED level (0, 1 or 2) setting the post spacing.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(0..=2))]
    pub level: u8,
    /// Centre latitude (degrees).
    #[arg(long, allow_hyphen_values = true)]
    pub lat: f64,
    /// Centre longitude (degrees).
    #[arg(long, allow_hyphen_values = true)]
    pub lon: f64,
    /// Posts either side of the centre post.
    #[arg(long, default_value_t = 60)]
    pub half: usize,
    /// Flat / plateau height or ridge peak (m).
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub height: f64,
    /// Ridge half-width (m).
    #[arg(long, default_value_t = 1000.0)]
    pub width_m: f64,
    /// Plateau rim width in posts.
    #[arg(long, default_value_t = 0)]
    pub margin: usize,
    /// Void every K-th post (0 for none).
    #[arg(long, default_value_t = 0)]
    pub voids: usize,
    /// Output format; inferred from the extension when absent.
    #[arg(long, value_enum)]
    pub format: Option<TileFormat>,
    /// Output file.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Cone { common, semi_angle } => commands::cone(&common, semi_angle),
        Command::Intersect { common, semi_angle } => commands::intersect(&common, semi_angle),
        Command::Terrain { common, semi_angle } => commands::terrain(&common, semi_angle),
        Command::Shift {
            common,
            config_b,
            detail,
            visible_only,
        } => commands::shift(&common, &config_b, detail, visible_only),
        Command::GenTile(args) => commands::gen_tile(&args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(4) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
