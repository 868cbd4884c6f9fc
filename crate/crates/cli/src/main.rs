//! `fowt-ccd`: batch front end for trim tables, LPV models, optimal control
//! solves and the plant-design sweep.
//!
//! Exit codes: 0 ok, 1 other failure, 2 validation failure or bad input,
//! 3 infeasible subproblem, 4 I/O error.

mod commands;
mod exit;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "fowt-ccd",
    version,
    about = "Control co-design toolkit for a floating wind turbine"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Split {
    /// Every other sample trains, the rest are held out.
    Alternate,
    /// All samples train and are scored.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Trim and linearize the surrogate over a range of wind speeds.
    Trim {
        /// `start:stop:step` in m/s.
        #[arg(long, default_value = "3:25:1")]
        wind_range: String,
        /// `c_s,c_d` in m.
        #[arg(long, default_value = "51.75,12.5")]
        plant: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build an LPV model from linearizations, or a plant family from the surrogate.
    LpvBuild {
        /// Directory of model JSON files.
        #[arg(long, required_unless_present = "family")]
        models: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Split::None)]
        split: Split,
        /// Build a `c_s`×`c_d` plant family instead, e.g. `7x7`.
        #[arg(long, conflicts_with = "models")]
        family: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score an LPV model against held-out linearizations.
    LpvValidate {
        #[arg(long)]
        models: PathBuf,
        #[arg(long, value_enum, default_value_t = Split::Alternate)]
        split: Split,
        /// Relative H∞ tolerance.
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
        /// Also run the step-wind comparison against the nonlinear surrogate.
        #[arg(long)]
        time_domain: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve one optimal control subproblem.
    OcSolve {
        /// Stored LPV model or plant family; built from the surrogate when absent.
        #[arg(long)]
        lpv: Option<PathBuf>,
        /// `c_s,c_d` in m, for plant families and surrogate builds.
        #[arg(long, default_value = "51.75,12.5")]
        plant: String,
        /// Wind case number, 1-based.
        #[arg(long, default_value_t = 7)]
        case: usize,
        /// Platform pitch limit [deg].
        #[arg(long)]
        theta_max: Option<f64>,
        /// Rotor speed limit: `1`, `2` for the two rated limits, or a value in rad/s.
        #[arg(long)]
        omega_max: Option<String>,
        #[arg(long = "N")]
        mesh: Option<usize>,
        /// Horizon [s].
        #[arg(long)]
        t_f: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// JSON file with subproblem settings.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the plant-design sweep.
    Sweep {
        /// JSON sweep configuration.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, env = "FOWT_CCD_WORKERS")]
        workers: Option<usize>,
        /// Per-solve result cache, enabling resumption.
        #[arg(long, env = "FOWT_CCD_CACHE_DIR")]
        cache_dir: Option<PathBuf>,
    },
    /// Print optima per pitch level and per capital cost corner.
    Report {
        /// Sweep output directory.
        #[arg(long)]
        sweep: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Trim {
            wind_range,
            plant,
            out,
        } => commands::trim(&wind_range, &plant, &out),
        Command::LpvBuild {
            models,
            split,
            family,
            out,
        } => commands::lpv_build(models.as_deref(), split, family.as_deref(), &out),
        Command::LpvValidate {
            models,
            split,
            epsilon,
            time_domain,
            out,
        } => commands::lpv_validate(&models, split, epsilon, time_domain, &out),
        Command::OcSolve {
            lpv,
            plant,
            case,
            theta_max,
            omega_max,
            mesh,
            t_f,
            seed,
            config,
            out,
        } => commands::oc_solve(&commands::OcArgs {
            lpv,
            plant,
            case,
            theta_max,
            omega_max,
            mesh,
            t_f,
            seed,
            config,
            out,
        }),
        Command::Sweep {
            config,
            out,
            workers,
            cache_dir,
        } => commands::sweep(&config, &out, workers, cache_dir),
        Command::Report { sweep, format } => commands::report(&sweep, format),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
