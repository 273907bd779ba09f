use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ion_cavity::cli::scan::{write_resolved_config, write_semiclassical};
use ion_cavity::cli::{run_scan, RunConfig};
use ion_cavity::{Error, Result};

#[derive(Parser)]
#[command(name = "ion-cavity", version, about = "Steady states of a trapped ion in a pumped cavity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Overrides `output_dir` from the configuration.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Worker threads for independent scan points.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Reserved; no computation is random.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Full quantum scan plus semiclassical branches.
    Run { config: PathBuf },
    /// Semiclassical branches only.
    Semiclassical { config: PathBuf },
    /// Parse the configuration and print the resolved values.
    Validate { config: PathBuf },
}

fn execute(cli: Cli) -> Result<()> {
    let load = |path: &PathBuf| -> Result<RunConfig> {
        let mut cfg = RunConfig::load(path)?;
        if let Some(dir) = &cli.output_dir {
            cfg.output_dir = dir.clone();
        }
        Ok(cfg)
    };
    if let Some(seed) = cli.seed {
        log::debug!("seed {seed} ignored");
    }
    match &cli.command {
        Command::Validate { config } => {
            print!("{}", load(config)?.to_config_string());
        }
        Command::Semiclassical { config } => {
            let cfg = load(config)?;
            std::fs::create_dir_all(&cfg.output_dir)?;
            write_resolved_config(&cfg, &cfg.output_dir)?;
            let path = write_semiclassical(&cfg, &cfg.output_dir)?;
            println!("{}", path.display());
        }
        Command::Run { config } => {
            let cfg = load(config)?;
            if cli.threads == 0 {
                return Err(Error::Configuration("--threads must be at least 1".to_string()));
            }
            let out = run_scan(&cfg, &cfg.output_dir, cli.threads)?;
            let failed = out.results.iter().filter(|r| !r.row.converged).count();
            for f in &out.files {
                println!("{}", f.display());
            }
            if failed > 0 {
                eprintln!("{failed} of {} points not converged; see the note column", out.results.len());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
