use clap::{Parser, Subcommand};
use khm_core::cli::{cmd_budget, cmd_ou_bench, cmd_simulate, cmd_stats, cmd_verify, thread_count, Outcome};
use khm_core::io::Config;
use khm_core::Result;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "khm-lab", version, about = "Stochastic Navier-Stokes runs and third-order balance checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Run configuration file
    #[arg(long)]
    config: PathBuf,
    /// Output directory
    #[arg(long, default_value = "khm-out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the ensemble, writing snapshots, checkpoints and energy series
    Simulate(Common),
    /// Structure functions, correlations and flatness from saved snapshots
    Stats(Common),
    /// Integrated budgets and bounds from the stats tables
    Budget(Common),
    /// Identity suite; exits 3 if any check fails
    Verify(Common),
    /// Heat-mode run compared with the linear theory
    OuBench(Common),
}

fn run(cmd: &Command) -> Result<Outcome> {
    let (f, c): (fn(&Config, &Path, usize) -> Result<Outcome>, &Common) = match cmd {
        Command::Simulate(c) => (cmd_simulate, c),
        Command::Stats(c) => (cmd_stats, c),
        Command::Budget(c) => (cmd_budget, c),
        Command::Verify(c) => (cmd_verify, c),
        Command::OuBench(c) => (cmd_ou_bench, c),
    };
    let cfg = Config::load(&c.config)?;
    let threads = thread_count()?;
    std::fs::create_dir_all(&c.out)?;
    f(&cfg, &c.out, threads)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli.command) {
        Ok(o) => {
            for l in &o.lines {
                println!("{l}");
            }
            ExitCode::from(if o.failed { 3 } else { 0 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
