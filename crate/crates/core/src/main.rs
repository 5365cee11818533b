use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use onecopy::bayes::Prior;
use onecopy::cli_io::{
    cmd_decoherence, cmd_simulate, load_povm, load_problem, parse_matrix_arg, parse_prior_arg, solve_json,
    summary_csv, sweep_csv, sweep_gamma, to_json, trials_csv, PovmChoice, Problem,
};
use onecopy::simulator::DecoherenceModel;
use onecopy::state::DensityMatrix;
use onecopy::{selftest, Error, Result};

#[derive(Parser)]
#[command(name = "onecopy", version, about = "Optimal single-copy estimation of a mixing parameter")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find the optimal measurement for a problem file and print it as JSON.
    Solve {
        #[arg(long)]
        problem: PathBuf,
        /// Prior as inline JSON or a file; overrides the problem file's prior.
        #[arg(long)]
        prior: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo estimate of the mean squared error of a measurement.
    Simulate {
        #[arg(long)]
        problem: PathBuf,
        /// POVM file to simulate instead of the optimal measurement.
        #[arg(long)]
        povm: Option<PathBuf>,
        #[arg(long)]
        prior: Option<String>,
        #[arg(long, default_value_t = 100_000)]
        n_trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Summary CSV destination.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write one CSV row per trial here.
        #[arg(long)]
        trials_out: Option<PathBuf>,
    },
    /// Optimal measurement angle as a function of gamma, as CSV.
    SweepGamma {
        #[arg(long)]
        rb: f64,
        #[arg(long, default_value_t = 360)]
        points: usize,
        /// Length of the difference vector used for the q_max column.
        #[arg(long, default_value_t = 1.0 / 3.0)]
        dr: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decay-rate estimation: optimal measurement plus a simulation.
    Decoherence {
        /// Equilibrium population of |0>.
        #[arg(long)]
        s: f64,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        bmax: f64,
        /// Initial state as inline JSON matrix or file; defaults to |0><0|.
        #[arg(long)]
        rho0: Option<String>,
        /// Use a uniform prior on lambda instead of the one induced by a uniform rate.
        #[arg(long)]
        uniform_prior: bool,
        #[arg(long, default_value_t = 100_000)]
        n_trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the randomized property checks.
    Selftest {
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::Solve { problem, prior, out } => {
            let problem = read_problem(&problem, prior.as_deref())?;
            emit(out.as_deref(), &(solve_json(&problem)? + "\n"))?;
        }
        Command::Simulate { problem, povm, prior, n_trials, seed, out, trials_out } => {
            let problem = read_problem(&problem, prior.as_deref())?;
            let choice = match povm {
                Some(path) => PovmChoice::Given(load_povm(&path)?),
                None => PovmChoice::Optimal,
            };
            let result = cmd_simulate(&problem, choice, n_trials, seed)?;
            if result.summary.flagged {
                eprintln!(
                    "warning: empirical MSE is {:.2} standard errors from the analytic mean variance",
                    result.summary.z_score()
                );
            }
            if let Some(path) = trials_out {
                write_file(&path, &trials_csv(&result.records))?;
            }
            emit(out.as_deref(), &summary_csv(&result.summary))?;
        }
        Command::SweepGamma { rb, points, dr, out } => {
            let rows = sweep_gamma(rb, points, dr)?;
            for r in rows.iter().filter(|r| onecopy::qubit::angle_distance(r.closed_form, r.oracle) > 1e-6) {
                eprintln!("warning: closed form and grid disagree at gamma = {}", r.gamma);
            }
            emit(out.as_deref(), &sweep_csv(&rows))?;
        }
        Command::Decoherence { s, t, bmax, rho0, uniform_prior, n_trials, seed, out } => {
            let rho0 = match rho0 {
                Some(arg) => DensityMatrix::new(parse_matrix_arg(&arg)?)?,
                None => DensityMatrix::diagonal(&[1.0, 0.0])?,
            };
            let model = DecoherenceModel::new(s, t, bmax, rho0).map_err(|e| Error::BadParameter(e.to_string()))?;
            let prior = uniform_prior.then(Prior::uniform);
            let result = cmd_decoherence(&model, prior, n_trials, seed)?;
            emit(out.as_deref(), &(to_json(&result)? + "\n"))?;
        }
        Command::Selftest { seed } => {
            let checks = selftest::run_all(seed);
            let mut failed = 0;
            for c in &checks {
                println!("[{}] {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                failed += usize::from(!c.passed);
            }
            if failed > 0 {
                eprintln!("{failed} of {} checks failed", checks.len());
                return Ok(1);
            }
        }
    }
    Ok(0)
}

fn read_problem(path: &Path, prior: Option<&str>) -> Result<Problem> {
    let mut problem = load_problem(path)?;
    if let Some(arg) = prior {
        problem.prior = parse_prior_arg(arg)?;
    }
    Ok(problem)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
