use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use swlyap::exec::Execution;
use swlyap_cli::commands::{self, GridRange, SweepSpec, VerifyOptions};
use swlyap_cli::input::read_pair;
use swlyap_cli::CliError;

/// Maximal Lyapunov exponent of a two-matrix switched system on SL(2,R).
#[derive(Parser)]
#[command(name = "swlyap", version, about)]
struct Cli {
    /// Run every search on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form exponent, case and optimal strategy for a matrix pair.
    Exponent {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Check the closed form against oracles and simulation; exit 1 on failure.
    Verify {
        file: PathBuf,
        /// Horizon of the tightness simulation.
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long, default_value_t = 500)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Tabulate case and exponent over a (tr B², tr AB) grid as CSV.
    Sweep {
        /// tr(A²).
        #[arg(long, allow_hyphen_values = true)]
        a: f64,
        /// tr(B²) range as lo:hi:n.
        #[arg(long, allow_hyphen_values = true)]
        b: String,
        /// tr(AB) range as lo:hi:n.
        #[arg(long, allow_hyphen_values = true)]
        c: String,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
    /// Propagate a control schedule and report growth rates.
    Simulate {
        file: PathBuf,
        /// JSON: {"segments": [{"duration": d, "u": u}, ...], "periodic": bool}.
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long)]
        horizon: Option<f64>,
    },
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    let tol = commands::classify_tol()?;
    match cli.command {
        Command::Exponent { file, json } => {
            let input = read_pair(&file)?;
            let out = commands::exponent(&input, tol)?;
            if json {
                print!("{}", commands::render_exponent_json(&out));
            } else {
                print!("{}", commands::render_exponent(&out));
            }
        }
        Command::Verify {
            file,
            horizon,
            trials,
            seed,
        } => {
            let input = read_pair(&file)?;
            let opts = VerifyOptions {
                horizon,
                trials,
                seed,
                exec,
            };
            let report = commands::verify(&input, tol, opts)?;
            print!("{}", report.render());
            if !report.all_pass() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Sweep { a, b, c, output } => {
            let spec = SweepSpec {
                a_fixed: a,
                b_range: b.parse::<GridRange>()?,
                c_range: c.parse::<GridRange>()?,
            };
            let n = commands::sweep(&spec, &output, tol, exec)
                .with_context(|| format!("writing {}", output.display()))?;
            eprintln!("wrote {n} rows to {}", output.display());
        }
        Command::Simulate {
            file,
            schedule,
            horizon,
        } => {
            let input = read_pair(&file)?;
            let sched = commands::read_schedule(&schedule)?;
            print!(
                "{}",
                commands::render_growth(&commands::simulate(&input, &sched, horizon)?)
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<CliError>().map_or(2, CliError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
