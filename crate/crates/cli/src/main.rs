//! `hmimo`: run the channel-estimation experiments from a JSON config.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hmimo_core::harness::{self, ExperimentConfig, ExperimentKind};
use hmimo_core::Error;

const EXIT_OTHER: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "hmimo", version, about = "DFT-based channel estimation experiments for holographic MIMO ULAs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write `<out>/<experiment>.csv` plus plot data.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the experiment named in the config.
        #[arg(long, value_enum)]
        experiment: Option<ExperimentArg>,
        /// Overrides `master_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `output`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; defaults to all cores.
        #[arg(long, env = "HMIMO_THREADS")]
        threads: Option<usize>,
    },
    /// Parse and validate a config without running anything.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Convert a result CSV into gnuplot data files.
    Plotdata {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentArg {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Bench,
}

impl From<ExperimentArg> for ExperimentKind {
    fn from(a: ExperimentArg) -> Self {
        match a {
            ExperimentArg::Fig1 => ExperimentKind::Fig1,
            ExperimentArg::Fig2 => ExperimentKind::Fig2,
            ExperimentArg::Fig3 => ExperimentKind::Fig3,
            ExperimentArg::Fig4 => ExperimentKind::Fig4,
            ExperimentArg::Bench => ExperimentKind::Bench,
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::InvalidParameter(_) => EXIT_CONFIG,
        Error::Trial { .. } => EXIT_NUMERICAL,
        e if e.is_numerical() => EXIT_NUMERICAL,
        _ => EXIT_OTHER,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Validate { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            cfg.validate()?;
            println!("{}: ok", config.display());
        }
        Command::Run {
            config,
            experiment,
            seed,
            out,
            threads,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(e) = experiment {
                cfg.experiment = Some(e.into());
            }
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            if let Some(o) = out {
                cfg.output = Some(o);
            }
            let kind = cfg.experiment()?;
            cfg.validate()?;
            let out_dir = cfg
                .output
                .clone()
                .ok_or_else(|| Error::Config("no output directory (use --out or \"output\")".into()))?;
            let mut pool = rayon::ThreadPoolBuilder::new();
            if let Some(n) = threads {
                if n == 0 {
                    return Err(Error::Config("--threads must be at least 1".into()));
                }
                pool = pool.num_threads(n);
            }
            let pool = pool.build().map_err(|e| Error::Config(e.to_string()))?;
            let path = pool.install(|| harness::run_to_dir(&cfg, kind, &out_dir))?;
            println!("{}", path.display());
        }
        Command::Plotdata { csv, out } => {
            let rows = harness::read_csv(std::fs::File::open(&csv)?)?;
            for p in harness::emit_plotdata(&rows, &out)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
