//! `kik` command-line front end.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kik_core::scenarios::config::{OutputFormat, ScenarioConfig, ScenarioKind, SEED_ENV};
use kik_core::scenarios::output::{render, write_outputs};
use kik_core::scenarios::run;
use kik_core::KikError;

#[derive(Parser)]
#[command(name = "kik", version, about = "Adaptive KIK error-mitigation scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config and write its result records.
    Run {
        config: PathBuf,
        /// Output file; overrides `output.path`. Without either, records go to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// csv or json; overrides `output.format`.
        #[arg(long)]
        format: Option<String>,
        /// Seed; takes precedence over KIK_SEED and the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for independent parameter points.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print the default config of a scenario.
    EmitDefault { scenario: String },
}

enum Failure {
    Config(String),
    Numerical(String),
}

impl From<KikError> for Failure {
    fn from(e: KikError) -> Self {
        if e.is_input_error() {
            Failure::Config(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

fn run_command(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::EmitDefault { scenario } => {
            let kind: ScenarioKind = scenario.parse()?;
            print!("{}", ScenarioConfig::default_for(kind).to_toml());
            Ok(())
        }
        Command::Run {
            config,
            out,
            format,
            seed,
            threads,
        } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| Failure::Config(format!("cannot read {}: {e}", config.display())))?;
            let mut cfg = ScenarioConfig::parse(&text)?;
            let env = std::env::var(SEED_ENV).ok();
            cfg.resolve_seed(seed, env.as_deref())?;
            if let Some(f) = format {
                cfg.output.format = f.parse::<OutputFormat>()?;
            }
            if let Some(p) = out {
                cfg.output.path = Some(p.display().to_string());
            }
            cfg.validate()?;
            if let Some(n) = threads {
                if n == 0 {
                    return Err(Failure::Config("--threads must be positive".into()));
                }
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .map_err(|e| Failure::Config(e.to_string()))?;
            }
            let result = run(&cfg)?;
            match &cfg.output.path {
                Some(p) => {
                    let (data, side) = write_outputs(&cfg, &result, p.as_ref(), cfg.output.format)?;
                    eprintln!(
                        "wrote {} records to {} ({}) in {:.2}s",
                        result.records.len(),
                        data.display(),
                        side.display(),
                        result.wall_clock_s
                    );
                }
                None => print!("{}", render(&result.records, cfg.output.format)?),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run_command(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("numerical failure: {m}");
            ExitCode::from(3)
        }
    }
}
