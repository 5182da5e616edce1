mod commands;
mod config;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fmp", version, about = "Parse communication events and belief dynamics from two-agent traces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Overrides every seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Render scripted scenarios or a random train/test corpus.
    Simulate,
    /// Fit a parser model on a labeled corpus.
    Train,
    /// Parse traces into event and belief layers.
    Parse,
    /// Score belief predictions against ground truth.
    Eval,
    /// Rank frames by belief-change mass and pick keyframes.
    Keyframes,
}

/// Failure with its process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_MODEL: u8 = 4;
pub const EXIT_INTERNAL: u8 = 5;

pub trait OrExit<T> {
    fn or_exit(self, code: u8) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> OrExit<T> for Result<T, E> {
    fn or_exit(self, code: u8) -> Result<T, Failure> {
        self.map_err(|e| Failure { code, error: e.into() })
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(anyhow::anyhow!("--jobs must be at least 1")).or_exit(EXIT_CONFIG);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .or_exit(EXIT_INTERNAL)?;
    }
    let (cfg, base) = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| anyhow::anyhow!("reading {}: {e}", p.display()))
                .or_exit(EXIT_CONFIG)?;
            let cfg = config::RunConfig::parse(&text)
                .map_err(|e| anyhow::anyhow!("{}: {e}", p.display()))
                .or_exit(EXIT_CONFIG)?;
            (cfg, p.parent().map(PathBuf::from).unwrap_or_default())
        }
        None => (config::RunConfig::default(), PathBuf::from(".")),
    };
    let cfg = cfg.finish(&base, cli.seed);
    let out = &cli.out;
    match cli.command {
        Command::Simulate => commands::simulate(&cfg, out),
        Command::Train => commands::train(&cfg, out),
        Command::Parse => commands::parse(&cfg, out),
        Command::Eval => commands::eval(&cfg, out),
        Command::Keyframes => commands::keyframes(&cfg, out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("FMP_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
