use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thzris_cli::{cmd_eval, cmd_generate, cmd_label, cmd_report, cmd_train, CliError, CliResult};
use thzris_core::Config;

#[derive(Parser)]
#[command(name = "thzris", version, about = "Beam and handoff prediction for RIS-assisted THz drone links")]
struct Cli {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep codebooks over every grid point and write labels.csv.
    Label,
    /// Draw labeled trajectories into dataset.txt.
    Generate,
    /// Train the beam and link predictors.
    Train,
    /// Evaluate checkpoints on the validation split and write reports.
    Eval {
        /// Beam checkpoint; defaults to beam_best.ckpt in the output directory.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Regenerate report files from run.json and metrics.json.
    Report,
}

fn run(cli: Cli) -> CliResult<String> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p).map_err(|e| match e {
            thzris_core::Error::Io(_) => CliError::Missing {
                path: p.clone(),
                produced_by: "--config",
            },
            other => other.into(),
        })?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.out_dir = out;
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.max(1))
        .build_global()
        .map_err(|e| CliError::Runtime(thzris_core::Error::Domain(e.to_string())))?;
    match cli.command {
        Command::Label => cmd_label(&cfg),
        Command::Generate => cmd_generate(&cfg),
        Command::Train => cmd_train(&cfg, |line| eprintln!("{line}")),
        Command::Eval { checkpoint } => cmd_eval(&cfg, checkpoint.as_deref()),
        Command::Report => cmd_report(&cfg),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
