use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use fermibox::cli;
use fermibox::config::RunConfig;

/// Spectral lab for density-matrix NLS dynamics near the Fermi sea.
#[derive(Parser)]
#[command(name = "fermibox", version, about)]
struct Args {
    /// Scenario to run (see --list).
    subcommand: Option<String>,
    /// Run-configuration file (key = value lines, or a manifest.json from a
    /// previous run).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the output directory from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// List available scenarios and exit.
    #[arg(long)]
    list: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if args.list {
        for s in cli::SUBCOMMANDS {
            println!("{s}");
        }
        return ExitCode::SUCCESS;
    }
    let Some(sub) = args.subcommand else {
        eprintln!("{}", error_record("none", "missing subcommand; try --list"));
        return ExitCode::FAILURE;
    };
    let cfg = match &args.config {
        Some(path) => RunConfig::from_file(path),
        None => Ok(RunConfig::default()),
    };
    let mut cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}", error_record(&sub, &e.to_string()));
            return ExitCode::FAILURE;
        }
    };
    if let Some(out) = args.out {
        cfg.output_dir = out.to_string_lossy().to_string();
    }
    match cli::run(&sub, &cfg) {
        Ok(artifacts) => {
            for a in artifacts {
                println!("{}/{a}", cfg.output_dir);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", error_record(&sub, &e.to_string()));
            ExitCode::FAILURE
        }
    }
}

fn error_record(scenario: &str, message: &str) -> String {
    serde_json::json!({ "scenario": scenario, "error": message }).to_string()
}
