use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use projlab_cli::commands::{run, DEFAULT_SEED};
use projlab_cli::config::{Command, MeasureConfig, Params, RunConfig};
use projlab_cli::{to_json, CliError};

#[derive(Parser)]
#[command(name = "projlab", version, about = "Random matrix products on projective space")]
struct Cli {
    /// Worker threads; defaults to all cores.
    #[arg(long, env = "PROJLAB_THREADS", global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Figure bundle and findings for a built-in example.
    Reproduce {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        example: u8,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    let (cfg, seed, out) = match cli.command {
        Cmd::Run { config, seed, out } => {
            let cfg = RunConfig::load(&config)?;
            let seed = cfg.resolve_seed(seed).unwrap_or(DEFAULT_SEED);
            let out = out.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
            (cfg, seed, out)
        }
        Cmd::Reproduce { example, seed, out } => {
            let cfg = RunConfig {
                measure: MeasureConfig { example: Some(example), ..Default::default() },
                command: Command::Reproduce,
                params: Params::default(),
                seed,
                output: None,
            };
            let out = out.unwrap_or_else(|| PathBuf::from(format!("reproduce-example{example}")));
            (cfg, seed.unwrap_or(DEFAULT_SEED), out)
        }
    };
    let artifacts = run(&cfg, seed)?;
    artifacts.write_to(&out)?;
    print!("{}", to_json(&artifacts.summary));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
