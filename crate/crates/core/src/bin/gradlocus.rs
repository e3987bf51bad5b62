use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gradlocus::cli::{
    cmd_charts, cmd_check, cmd_demo, cmd_dimension, cmd_locus, load_scenario, read_samples_csv, samples_csv,
    threads_from_env, CliError, Overrides, DEFAULT_CHECK_POINTS, EXIT_ERROR, THREADS_ENV,
};

/// Integrability checks and prescribed-gradient locus extraction for bilinear
/// structures on R^n.
#[derive(Parser)]
#[command(name = "gradlocus", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Residual and obstruction statistics for a scenario; prints JSON.
    Check {
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Sample and certify the locus; writes points.csv and summary.json.
    Locus {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Box-count an existing point cloud CSV; prints JSON.
    Dimension {
        csv: PathBuf,
        /// Use every row instead of the certified ones.
        #[arg(long)]
        all: bool,
    },
    /// Recompute chart memberships for an existing point cloud CSV.
    Charts {
        csv: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        /// Directory for the recomputed points.csv; stdout only when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Run a built-in scenario: circle-m1, plane-m2 or minkowski-grad.
    Demo {
        name: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Seed count for locus commands, sample count for check.
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol_residual: Option<f64>,
    #[arg(long)]
    tol_gamma: Option<f64>,
    #[arg(long)]
    tol_rank: Option<f64>,
}

impl Common {
    fn overrides(&self, with_points: bool) -> Overrides {
        Overrides {
            points: if with_points { self.points } else { None },
            seed: self.seed,
            tol_residual: self.tol_residual,
            tol_gamma: self.tol_gamma,
            tol_rank: self.tol_rank,
        }
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serializes")
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let threads = threads_from_env(std::env::var(THREADS_ENV).ok().as_deref())?;
    match cli.command {
        Command::Check { scenario, common } => {
            let s = common.overrides(false).apply(load_scenario(&scenario)?)?;
            let report = cmd_check(&s, common.points.unwrap_or(DEFAULT_CHECK_POINTS))?;
            println!("{}", to_json(&report));
            Ok(0)
        }
        Command::Locus { scenario, out, common } => {
            let s = common.overrides(true).apply(load_scenario(&scenario)?)?;
            let outcome = cmd_locus(&s, threads)?;
            outcome.write_to(&out)?;
            print!("{}", outcome.summary_json());
            Ok(outcome.exit_code())
        }
        Command::Demo { name, out, common } => {
            let outcome = cmd_demo(&name, &common.overrides(true), threads)?;
            outcome.write_to(&out)?;
            print!("{}", outcome.summary_json());
            Ok(outcome.exit_code())
        }
        Command::Dimension { csv, all } => {
            let (_, rows) = read_samples_csv(&csv)?;
            println!("{}", to_json(&cmd_dimension(&rows, !all)?));
            Ok(0)
        }
        Command::Charts { csv, scenario, out, common } => {
            let s = common.overrides(false).apply(load_scenario(&scenario)?)?;
            let (dim, rows) = read_samples_csv(&csv)?;
            let outcome = cmd_charts(&s, dim, &rows)?;
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).map_err(|source| CliError::Io { path: dir.clone(), source })?;
                let path = dir.join("points.csv");
                std::fs::write(&path, samples_csv(&outcome.samples, dim))
                    .map_err(|source| CliError::Io { path: path.clone(), source })?;
            }
            let report = serde_json::json!({ "cover": outcome.cover, "changed_rows": outcome.changed_rows });
            println!("{}", to_json(&report));
            Ok(if outcome.cover.passed { 0 } else { gradlocus::cli::EXIT_COVER_FAILED })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
