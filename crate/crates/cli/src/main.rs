use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use polyagent_cli::commands::{self, ComposeArgs, HomArgs, LawsArgs, PlanArgs, SimulateArgs};
use polyagent_cli::{CliError, CliResult, Guards, RunReport};
use polyagent_core::laws::SuiteSizes;

/// Polynomial interfaces, generative models and active-inference agents.
///
/// Exit codes: 0 success, 1 a check failed or I/O error, 2 parse or usage
/// error, 3 unresolved reference, 4 invariant violation, 5 size guard,
/// 6 error while running an experiment. POLYAGENT_GUARD overrides the
/// enumeration guards.
#[derive(Parser)]
#[command(name = "polyagent", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mutant {
    LensCompose,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, resolve and check every declaration.
    Validate { scenario: PathBuf },
    /// Run the law suites on declared and/or random instances.
    CheckLaws {
        scenario: Option<PathBuf>,
        /// Also run the random suites from this seed.
        #[arg(long)]
        random: Option<u64>,
        /// Seed for episodes in the declared sweep.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        mutant: Option<Mutant>,
        #[arg(long, default_value_t = SuiteSizes::default().lens_trials)]
        lens_trials: usize,
        #[arg(long, default_value_t = SuiteSizes::default().channel_trials)]
        channel_trials: usize,
        #[arg(long, default_value_t = SuiteSizes::default().bayes_trials)]
        bayes_trials: usize,
        #[arg(long, default_value_t = SuiteSizes::default().gen_trials)]
        gen_trials: usize,
        #[arg(long, default_value_t = SuiteSizes::default().filter_models)]
        filter_models: usize,
    },
    /// Compute the internal hom [P, Q] of two polynomials or expressions.
    Hom {
        source: String,
        target: String,
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Inline set `NAME=SIZE` for expressions.
        #[arg(long = "set", value_parser = parse_set)]
        sets: Vec<(String, usize)>,
        /// List every lens.
        #[arg(long)]
        enumerate: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an unroll or simulate experiment, writing JSONL records.
    Simulate {
        scenario: PathBuf,
        experiment: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank policies of an EFE agent by expected free energy.
    Plan {
        scenario: PathBuf,
        /// An agent or a plan experiment.
        name: String,
        #[arg(long)]
        position: Option<String>,
        /// Comma-separated state distribution.
        #[arg(long, value_delimiter = ',')]
        belief: Option<Vec<f64>>,
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Flatten a composite agent's model into a scenario fragment.
    Compose {
        scenario: PathBuf,
        /// A composite agent or a compose experiment.
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_set(s: &str) -> Result<(String, usize), String> {
    let (name, size) = s
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=SIZE, got {s:?}"))?;
    let size = size
        .parse()
        .map_err(|_| format!("{size:?} is not a size"))?;
    Ok((name.to_string(), size))
}

fn run(cli: Cli) -> CliResult<RunReport> {
    let guards = Guards::from_env()?;
    match cli.command {
        Command::Validate { scenario } => commands::validate(&scenario, guards),
        Command::CheckLaws {
            scenario,
            random,
            seed,
            mutant,
            lens_trials,
            channel_trials,
            bayes_trials,
            gen_trials,
            filter_models,
        } => {
            let sizes = SuiteSizes {
                lens_trials,
                channel_trials,
                bayes_trials,
                gen_trials,
                filter_models,
                ..SuiteSizes::default()
            };
            let args = LawsArgs {
                scenario,
                random,
                sizes,
                mutant: mutant.is_some(),
                seed,
            };
            commands::check_laws(&args, guards)
        }
        Command::Hom {
            source,
            target,
            scenario,
            sets,
            enumerate,
            out,
        } => commands::hom(
            &HomArgs {
                source,
                target,
                scenario,
                sets,
                enumerate,
                out,
            },
            guards,
        ),
        Command::Simulate {
            scenario,
            experiment,
            seed,
            out,
        } => commands::simulate(
            &SimulateArgs {
                scenario,
                experiment,
                seed,
                out,
            },
            guards,
        ),
        Command::Plan {
            scenario,
            name,
            position,
            belief,
            horizon,
        } => commands::plan(
            &PlanArgs {
                scenario,
                name,
                position,
                belief,
                horizon,
            },
            guards,
        ),
        Command::Compose {
            scenario,
            name,
            out,
        } => commands::compose(
            &ComposeArgs {
                scenario,
                name,
                out,
            },
            guards,
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(report) => {
            print!("{}", report.to_json());
            if !report.ok {
                for c in report.checks.iter().filter(|c| !c.pass) {
                    eprintln!(
                        "check failed: {} (residual {}) {}",
                        c.name, c.residual, c.detail
                    );
                }
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &CliError) -> u8 {
    e.exit_code() as u8
}
