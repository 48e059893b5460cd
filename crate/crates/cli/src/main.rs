use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use colombeau_wave_cli::{exit, report, run_suite, write_bundle, CliError, RunConfig};

#[derive(Parser)]
#[command(name = "cwave", version, about = "Regularized semilinear wave experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every scenario of a config and write the report bundle.
    Run {
        config: PathBuf,
        /// Also write SVG plots.
        #[arg(long)]
        plots: bool,
    },
    /// Print the verdict table of an existing bundle.
    Report { dir: PathBuf },
    /// Check a config against the schema and the scenario hypotheses.
    Validate { config: PathBuf },
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run { config, plots } => {
            let cfg = RunConfig::load(&config)?;
            let dir = cfg.effective_output_dir();
            let suite = run_suite(&cfg)?;
            for (spec, outcome) in &suite.outcomes {
                match outcome {
                    colombeau_wave_cli::Outcome::Done(r) => {
                        eprintln!("{:<26} {}", spec.label, if r.passed { "pass" } else { "FAIL" });
                        for c in r.failed_checks() {
                            eprintln!("    {}: {} vs {} ({})", c.name, c.value, c.threshold, c.detail);
                        }
                    }
                    colombeau_wave_cli::Outcome::Error(e) => eprintln!("{:<26} ERROR {e}", spec.label),
                }
            }
            write_bundle(&dir, &cfg, &suite, plots)?;
            eprintln!("wrote {}", dir.display());
            Ok(suite.exit_code())
        }
        Command::Report { dir } => {
            print!("{}", report::summarize(&dir)?);
            Ok(exit::PASS)
        }
        Command::Validate { config } => {
            let cfg = RunConfig::load(&config)?;
            println!("ok: {} scenario(s)", cfg.scenarios.len());
            Ok(exit::PASS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit::ERROR as u8)
        }
    }
}
