//! `goldilocks`: batch sweeps over the annealed-probe computations, written
//! as plot-ready tables into a content-addressed output directory.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Job;
use config::{Flags, Settings, ValidationError};
use output::Opened;

#[derive(Debug, Parser)]
#[command(name = "goldilocks", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Lowest eigenvalues and the E_2 - E_0 gap versus Γ.
    Spectrum,
    /// Scale-free landmarks a_0, a_F, quartic-oscillator scan, Γ_0(N) and Γ_F(N).
    Landmarks,
    /// Ground-state QFI versus Γ with the thermodynamic overlay and the maxima locus.
    Qfi,
    /// P_0 versus τ/N, adiabatic time estimates and overlap spectrograms.
    Anneal,
    /// Geometric entanglement versus Γ with closed forms, and its maxima.
    Entanglement,
    /// Sudden-quench QFI landscape, seeded optimum, annealed/quenched comparison.
    Quench,
    /// Gap and penalty factors versus N against their scale-free constants.
    Convergence,
}

fn plan(command: Command, flags: &Flags) -> Result<Box<dyn Job>, ValidationError> {
    Ok(match command {
        Command::Spectrum => Box::new(commands::Spectrum::plan(flags)?),
        Command::Landmarks => Box::new(commands::Landmarks::plan(flags)?),
        Command::Qfi => Box::new(commands::Qfi::plan(flags)?),
        Command::Anneal => Box::new(commands::Anneal::plan(flags)?),
        Command::Entanglement => Box::new(commands::Entanglement::plan(flags)?),
        Command::Quench => Box::new(commands::Quench::plan(flags)?),
        Command::Convergence => Box::new(commands::Convergence::plan(flags)?),
    })
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let flags = cli.flags.with_config_file()?;
    let settings = Settings::from_flags(&flags)?;
    let job = plan(cli.command, &flags)?;
    for key in flags.supplied() {
        if !job.uses().contains(&key) {
            eprintln!("warning: `{key}` has no effect on `{}`", job.name());
        }
    }
    match output::open_run(&settings.out, job.name(), job.config(), settings.format, !settings.no_cache)? {
        Opened::Cached { dir, record } => {
            println!("cached {}", dir.display());
            for t in &record.tables {
                println!("  {}", t.file);
            }
        }
        Opened::Fresh(mut writer) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(settings.jobs).build()?;
            let dir = writer.dir().to_path_buf();
            pool.install(|| job.run(&mut writer))?;
            let record = writer.finish()?;
            println!("computed {}", dir.display());
            for t in &record.tables {
                println!("  {}", t.file);
            }
        }
    }
    Ok(())
}

/// 2 for bad input, 3 for numerical failure, 1 for anything else (I/O).
fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<ValidationError>().is_some() {
        return 2;
    }
    match e.downcast_ref::<goldilocks_core::Error>() {
        Some(goldilocks_core::Error::InvalidParameter { .. }) => 2,
        Some(_) => 3,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
