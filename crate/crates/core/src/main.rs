use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use purchase_timing::cli::{run_file, run_preset, RunOptions, RunReport, PRESETS};

#[derive(Parser)]
#[command(
    name = "purchase-timing",
    version,
    about = "Optimal option purchase timing scenarios"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Only report errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a JSON scenario document.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named preset.
    Preset {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List presets.
    List,
}

fn report(r: &RunReport) {
    println!(
        "{}: ok in {:.2}s, outputs in {}",
        r.scenario,
        r.seconds,
        r.out_dir.display()
    );
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("config error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("could not size the worker pool: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::List => {
            for p in PRESETS {
                println!("{:<16} {}", p.name, p.description);
            }
            return ExitCode::SUCCESS;
        }
        Command::Run { config, out } => run_file(&config, &RunOptions { out }),
        Command::Preset { name, out } => run_preset(&name, &RunOptions { out }),
    };
    match result {
        Ok(r) => {
            if !cli.quiet {
                report(&r);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
