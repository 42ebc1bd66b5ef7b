use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gridcarve_cli::{init_threads, load_config, run, Mode, RunError, RunOptions};

/// Finite differences on irregular domains embedded in a uniform grid.
#[derive(Parser)]
#[command(name = "gridcarve", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the mode selected in the config (steady, sweep or timestep).
    Run {
        config: PathBuf,
        /// Also write the assembled rows as system_<variant>.csv.
        #[arg(long)]
        dump_system: bool,
        /// Output directory, overriding `output.directory`.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Run a refinement sweep over `run.dx_list`.
    Sweep {
        config: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
}

fn execute(cli: Cli) -> Result<(), RunError> {
    init_threads(std::env::var("GRIDCARVE_THREADS").ok().as_deref())?;
    let (path, mode, opts) = match cli.command {
        Command::Run {
            config,
            dump_system,
            out,
        } => (config, None, RunOptions { dump_system, out }),
        Command::Sweep { config, out } => (
            config,
            Some(Mode::Sweep),
            RunOptions {
                dump_system: false,
                out,
            },
        ),
    };
    let cfg = load_config(&path, mode)?;
    let out = run(&cfg, &opts)?;
    for line in &out.summary {
        println!("{line}");
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gridcarve: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
