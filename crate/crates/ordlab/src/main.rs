use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use ordlab::config::ExperimentConfig;
use ordlab::experiment::{output_dir, run, Command, Context};
use ordlab::Error;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Sub {
    Train,
    Explore,
    Poa,
    Cascade,
    Gradual,
    Tta,
    AttackEval,
    Plot,
}

#[derive(Parser, Debug)]
#[command(name = "ordlab", about = "Training-order and sum-augmentation experiments")]
struct Cli {
    #[arg(value_enum)]
    subcommand: Sub,
    #[arg(long)]
    config: PathBuf,
    /// Overrides run.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to $ORDLAB_WORKERS, then 1.
    #[arg(long)]
    workers: Option<usize>,
    /// Overrides run.output_dir.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn workers(flag: Option<usize>) -> Result<usize, Error> {
    if let Some(w) = flag {
        return Ok(w.max(1));
    }
    match std::env::var("ORDLAB_WORKERS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(|w| w.max(1))
            .map_err(|_| Error::config("ORDLAB_WORKERS", format!("expected a worker count, got `{v}`"))),
        Err(_) => Ok(1),
    }
}

fn execute(cli: Cli) -> Result<(), Error> {
    let mut cfg = ExperimentConfig::parse_file(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.set("run.seed", &seed.to_string())?;
    }
    if let Some(out) = &cli.out {
        cfg.set("run.output_dir", &out.display().to_string())?;
    }
    let cmd = match cli.subcommand {
        Sub::Train => Command::Train,
        Sub::Explore => Command::Explore,
        Sub::Poa => Command::Poa,
        Sub::Cascade => Command::Cascade,
        Sub::Gradual => Command::Gradual,
        Sub::Tta => Command::Tta,
        Sub::AttackEval => Command::AttackEval,
        Sub::Plot => Command::Plot,
    };
    let ctx = Context {
        out: output_dir(&cfg),
        workers: workers(cli.workers)?,
        cfg,
    };
    for path in run(cmd, &ctx)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ordlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
