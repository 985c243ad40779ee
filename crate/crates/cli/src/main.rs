use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mlctl::{list_scenarios, run, write_error_file, RunConfig};
use multilevel_control::acceptance::{run_criterion, CRITERIA};

#[derive(Parser)]
#[command(name = "mlctl", version, about = "Run multi-level control scenarios and write their data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write `{scenario}_{seed}.json` plus artifacts.
    Run {
        #[arg(long)]
        scenario: String,
        /// Flat JSON object of overrides (Hz, µs).
        #[arg(long)]
        config: Option<PathBuf>,
        /// `key=value`, applied after `--config`; repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Print the scenarios and what each reproduces.
    List,
    /// Run the acceptance criteria and print a pass/fail table.
    Acceptance {
        /// Only these criterion numbers.
        #[arg(long = "only")]
        only: Vec<u32>,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { scenario, config, sets, seed, out } => {
            let stem = format!("{scenario}_{seed}");
            let result =
                RunConfig::parse(&scenario, config.as_deref(), &sets, seed, out.clone()).and_then(|rc| run(&rc));
            match result {
                Ok(o) => {
                    let files: Vec<String> = o.files.iter().map(|p| p.display().to_string()).collect();
                    println!(
                        "{}",
                        serde_json::json!({ "scenario": o.report.name, "seed": seed, "pass": o.report.pass, "files": files })
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    write_error_file(&out, &stem, &e);
                    eprintln!("{}", e.to_json());
                    ExitCode::from(2)
                }
            }
        }
        Command::List => {
            print!("{}", list_scenarios());
            ExitCode::SUCCESS
        }
        Command::Acceptance { only } => {
            let ids: Vec<u32> = if only.is_empty() { CRITERIA.iter().map(|c| c.0).collect() } else { only };
            let mut ok = true;
            for id in ids {
                let o = run_criterion(id);
                ok &= o.passed;
                println!("{o}");
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
