use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nlos_bounds_cli::commands::{self, CommandOutput, Overrides};
use nlos_bounds_cli::Result;

#[derive(Parser)]
#[command(version, about = "Position and orientation error bounds with NLOS paths")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Seed of the path phases (overrides the file)
    #[arg(long)]
    seed: Option<u64>,
    /// Closed-form per-path evaluation instead of the full channel FIM
    #[arg(long)]
    fast: bool,
    /// Anchor ULA size (overrides the file)
    #[arg(long)]
    ntx: Option<usize>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            fast: self.fast,
            ntx: self.ntx,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Rank-one terms of the position/orientation EFIM, EFIM and bounds
    Decompose {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Also write decompose.json and a manifest here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// PEB, OEB and EFIM rank
    Bounds {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Move one extra incidence point over a grid
    Sweep {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Grid points per axis (overrides the file)
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, default_value = "sweep-out")]
        out: PathBuf,
    },
    /// Bounds and per-term differences between two scenarios with the same link
    Compare {
        file_a: PathBuf,
        file_b: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<CommandOutput> {
    match cli.command {
        Command::Decompose { file, common, out } => commands::decompose(&file, &common.overrides(), out.as_deref()),
        Command::Bounds { file, common, out } => commands::bounds(&file, &common.overrides(), out.as_deref()),
        Command::Sweep {
            file,
            common,
            grid,
            out,
        } => commands::sweep_cmd(&file, &common.overrides(), grid, &out),
        Command::Compare {
            file_a,
            file_b,
            common,
            out,
        } => commands::compare(&file_a, &file_b, &common.overrides(), out.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(output) => {
            print!("{}", output.stdout);
            if let Some(manifest) = output.manifest {
                log::info!("wrote {}", manifest.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
