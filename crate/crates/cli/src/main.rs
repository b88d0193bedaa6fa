//! `twr`: parameter sweeps, relay optimization and the validation battery.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use twr_core::optimizer;
use twr_core::presets;
use twr_core::scenario::ScenarioFile;
use twr_core::sweep::{run_sweep, SweepSpec};
use twr_core::validate::{self, Level, Mutation};
use twr_core::Error;

#[derive(Parser)]
#[command(
    name = "twr",
    version,
    about = "Three-phase two-way relaying under co-channel interference"
)]
struct Cli {
    /// Overrides every Monte Carlo seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate metrics over a parameter range and write a CSV.
    Sweep {
        /// Scenario JSON file or preset name; defaults to the preset's scenario.
        #[arg(long)]
        scenario: Option<String>,
        /// Sweep JSON file or preset name (fig2..fig8).
        #[arg(long)]
        sweep: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Optimize the relay power split and/or location and write a JSON result.
    Optimize {
        /// Scenario JSON file or preset name.
        #[arg(long)]
        scenario: String,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Alternating iterations for `joint`.
        #[arg(long, default_value_t = 3)]
        iterations: usize,
        /// Points per axis for `grid`.
        #[arg(long, default_value_t = 1000)]
        resolution: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the cross-validation battery.
    Validate {
        #[arg(long, value_enum, default_value_t = LevelArg::Fast)]
        level: LevelArg,
        #[arg(long, value_enum, default_value_t = Inject::None, hide = true)]
        inject: Inject,
    },
    /// List the built-in presets.
    Presets,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Omega,
    Location,
    Joint,
    Grid,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LevelArg {
    Fast,
    Full,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Inject {
    None,
    DropRelayInterferenceTerm,
    SwapPowerCoefficients,
}

const EXIT_VALIDATION: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_SCENARIO: u8 = 3;
const EXIT_NUMERICS: u8 = 4;
const EXIT_DEGENERATE: u8 = 5;

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse(_) | Error::InvalidSweep(_) => EXIT_PARSE,
            Error::InvalidScenario(_)
            | Error::Domain { .. }
            | Error::Tie { .. }
            | Error::Normalization { .. } => EXIT_SCENARIO,
            Error::DegenerateRatio { .. } => EXIT_DEGENERATE,
            Error::NonConvergence { .. } | Error::SeriesDivergence { .. } => EXIT_NUMERICS,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure {
        code: EXIT_PARSE,
        message: format!("cannot read {}: {e}", path.display()),
    })
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure {
        code: EXIT_PARSE,
        message: format!("cannot write {}: {e}", path.display()),
    })
}

/// A path that exists is read as a file; otherwise the argument must name a preset.
fn is_preset(arg: &str) -> bool {
    !Path::new(arg).exists() && presets::names().any(|n| n == arg)
}

fn load_scenario(arg: &str) -> Result<ScenarioFile, Failure> {
    if is_preset(arg) {
        return Ok(presets::get(arg)?.scenario);
    }
    Ok(ScenarioFile::from_json(&read(Path::new(arg))?)?)
}

fn sweep(
    scenario: Option<&str>,
    sweep: &str,
    out: &Path,
    seed: Option<u64>,
) -> Result<(), Failure> {
    let (mut spec, preset_scenario) = if is_preset(sweep) {
        let p = presets::get(sweep)?;
        (p.sweep, Some(p.scenario))
    } else {
        (SweepSpec::from_json(&read(Path::new(sweep))?)?, None)
    };
    let file = match (scenario, preset_scenario) {
        (Some(arg), _) => load_scenario(arg)?,
        (None, Some(f)) => f,
        (None, None) => {
            return Err(Failure {
                code: EXIT_PARSE,
                message: "--scenario is required unless --sweep names a preset".into(),
            });
        }
    };
    if let Some(seed) = seed {
        spec.mc.seed = seed;
    }
    let result = run_sweep(&file, &spec)?;
    write(out, &result.to_csv())?;
    if result.failures.is_empty() {
        return Ok(());
    }
    for f in &result.failures {
        eprintln!("twr: {f}");
    }
    Err(Failure {
        code: EXIT_NUMERICS,
        message: format!(
            "{} analytic cells did not converge; written as NaN to {}",
            result.failures.len(),
            out.display()
        ),
    })
}

fn optimize(
    scenario: &str,
    mode: Mode,
    iterations: usize,
    resolution: usize,
    out: &Path,
) -> Result<(), Failure> {
    let s = load_scenario(scenario)?.to_scenario()?;
    let (name, result) = match mode {
        Mode::Omega => ("omega", optimizer::optimize_omega(&s)),
        Mode::Location => ("location", optimizer::optimize_location(&s)?),
        Mode::Joint => ("joint", optimizer::joint_optimize(&s, iterations)?),
        Mode::Grid => ("grid", optimizer::grid_search(&s, resolution)?),
    };
    let mut json = serde_json::to_value(&result).expect("results serialize");
    json["mode"] = name.into();
    write(
        out,
        &(serde_json::to_string_pretty(&json).expect("values serialize") + "\n"),
    )
}

fn run_validation(level: LevelArg, inject: Inject, seed: Option<u64>) -> Result<(), Failure> {
    let level = match level {
        LevelArg::Fast => Level::Fast,
        LevelArg::Full => Level::Full,
    };
    let mutation = match inject {
        Inject::None => Mutation::None,
        Inject::DropRelayInterferenceTerm => Mutation::DropRelayInterferenceTerm,
        Inject::SwapPowerCoefficients => Mutation::SwapPowerCoefficients,
    };
    if mutation != Mutation::None {
        println!("injected defect: {mutation:?}");
    }
    let report = validate::run_with(level, mutation, seed.unwrap_or(1), |c| {
        println!("{}", c.summary_line())
    });
    println!();
    print!("{report}");
    if report.passed() {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_VALIDATION,
            message: "validation failed".into(),
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Sweep {
            scenario,
            sweep: spec,
            out,
        } => sweep(scenario.as_deref(), spec, out, cli.seed),
        Command::Optimize {
            scenario,
            mode,
            iterations,
            resolution,
            out,
        } => optimize(scenario, *mode, *iterations, *resolution, out),
        Command::Validate { level, inject } => run_validation(*level, *inject, cli.seed),
        Command::Presets => {
            for name in presets::names() {
                let p = presets::get(name).expect("built-in presets parse");
                println!("{name}\t{}", p.description);
            }
            Ok(())
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("twr: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
