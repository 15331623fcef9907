use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use corrineq::optimize::{SearchConfig, SettingsParametrization};
use corrineq::protocol::{simulate_shots, write_shot_dump, MeasurementChoice};
use corrineq::report::{
    bound_report, check_report, derive_report, optimize_report, reproduce, reproduce_all, scan_report,
    simulate_report, CheckVerdict, OptimizeOptions, Report, ReportError, SimulateOptions, Source,
    StateChoice, Target, TargetOptions, DEFAULT_SEED, DEFAULT_SHOTS,
};

#[derive(Parser)]
#[command(name = "corrineq", version, about = "Derive, bound and test correlation inequalities")]
struct Cli {
    /// Output format; csv is only available for `scan`.
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    format: Format,
    /// Slack allowed when deciding feasibility and whether an inequality holds.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tolerance: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Json,
    Csv,
}

#[derive(Args)]
struct InputArgs {
    /// Sum-of-squares source (`.rsx`).
    #[arg(long)]
    input: PathBuf,
    /// Measurement scenario (`.scn`).
    #[arg(long)]
    scenario: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Expand a sum of squares into its correlation inequality.
    Derive(InputArgs),
    /// Classical and no-disturbance optima of an inequality.
    Bound(InputArgs),
    /// Test observed correlators for a joint distribution (exit 0 feasible, 1 infeasible).
    Check {
        #[arg(long)]
        scenario: PathBuf,
        /// Observations (`.obs`).
        #[arg(long)]
        input: PathBuf,
        /// Also evaluate this inequality on the observations.
        #[arg(long)]
        inequality: Option<PathBuf>,
    },
    /// Search qubit settings for the largest violation.
    Optimize {
        #[command(flatten)]
        files: InputArgs,
        #[arg(long, value_enum, default_value_t = StateChoice::Singlet)]
        state: StateChoice,
        /// Grid points per angle before refinement.
        #[arg(long, default_value_t = SearchConfig::default().grid_points)]
        grid: usize,
        /// Let directions leave the x-z plane.
        #[arg(long)]
        full_sphere: bool,
        /// Extra refinements from random starts.
        #[arg(long, default_value_t = 0)]
        starts: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Monte Carlo run of the hybrid protocol.
    Simulate {
        #[arg(long, value_enum, default_value_t = StateChoice::Singlet)]
        state: StateChoice,
        #[arg(long, default_value_t = DEFAULT_SHOTS)]
        shots: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Write every shot to this file, one line each.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Tabulate the hybrid envelope over the two setting angles.
    Scan {
        #[arg(long, default_value_t = 400)]
        grid: usize,
    },
    /// Rerun a published value (`all` runs every target). Exit 1 if any check fails.
    Reproduce {
        target: String,
        #[arg(long, default_value_t = DEFAULT_SHOTS)]
        shots: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Points per angle for the envelope scan.
        #[arg(long, default_value_t = 400)]
        grid: usize,
    },
}

fn opt_source(path: &Option<PathBuf>) -> Result<Option<Source>, ReportError> {
    path.as_deref().map(Source::read).transpose()
}

/// Runs the command; the flag is false when the exit status should be 1.
fn run(cli: &Cli) -> Result<(Report, bool), ReportError> {
    match &cli.command {
        Command::Derive(a) => {
            let scenario = opt_source(&a.scenario)?;
            Ok((derive_report(&Source::read(&a.input)?, scenario.as_ref())?, true))
        }
        Command::Bound(a) => {
            let scenario = opt_source(&a.scenario)?;
            Ok((bound_report(&Source::read(&a.input)?, scenario.as_ref())?, true))
        }
        Command::Check { scenario, input, inequality } => {
            let ineq = opt_source(inequality)?;
            let (report, verdict) =
                check_report(&Source::read(scenario)?, &Source::read(input)?, ineq.as_ref(), cli.tolerance)?;
            Ok((report, verdict == CheckVerdict::Feasible))
        }
        Command::Optimize { files, state, grid, full_sphere, starts, seed } => {
            if *grid < 2 {
                return Err(ReportError::Unsupported("--grid must be at least 2".into()));
            }
            let options = OptimizeOptions {
                state: *state,
                parametrization: if *full_sphere {
                    SettingsParametrization::FullSphere
                } else {
                    SettingsParametrization::Coplanar
                },
                search: SearchConfig { grid_points: *grid, ..SearchConfig::default() },
                starts: *starts,
                seed: *seed,
            };
            let scenario = opt_source(&files.scenario)?;
            Ok((optimize_report(&Source::read(&files.input)?, scenario.as_ref(), &options)?, true))
        }
        Command::Simulate { state, shots, seed, dump } => {
            let options = SimulateOptions { state: *state, shots: *shots, seed: *seed };
            let report = simulate_report(&options)?;
            if let Some(path) = dump {
                let (rho, settings) = state.protocol_setup();
                let records = simulate_shots(&rho, &settings, &MeasurementChoice::data_yielding(), *shots, *seed)?;
                let io = |source| ReportError::Io { path: path.display().to_string(), source };
                let file = File::create(path).map_err(io)?;
                let mut w = BufWriter::new(file);
                write_shot_dump(&mut w, &records).map_err(io)?;
                w.flush().map_err(io)?;
            }
            Ok((report, true))
        }
        Command::Scan { grid } => Ok((scan_report(*grid)?, true)),
        Command::Reproduce { target, shots, seed, grid } => {
            let options = TargetOptions { shots: *shots, seed: *seed, grid: *grid, ..TargetOptions::default() };
            let report = if target == "all" {
                reproduce_all(&options)?
            } else {
                reproduce(target.parse::<Target>()?, &options)?
            };
            let pass = report.result["pass"].as_bool().unwrap_or(false);
            Ok((report, pass))
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("CORRINEQ_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .map_err(|_| format!("CORRINEQ_THREADS must be a positive integer, got `{value}`"))?;
    if n == 0 {
        return Err("CORRINEQ_THREADS must be a positive integer, got `0`".into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    if cli.format == Format::Csv && !matches!(cli.command, Command::Scan { .. }) {
        eprintln!("error: csv output is only available for scan");
        return ExitCode::from(2);
    }
    let (report, ok) = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let text = match cli.format {
        Format::Human => report.to_human(),
        Format::Json => report.to_json(),
        Format::Csv => report.csv.clone().unwrap_or_default(),
    };
    let mut out = std::io::stdout().lock();
    if out.write_all(text.as_bytes()).and_then(|_| out.flush()).is_err() {
        return ExitCode::from(2);
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
