use caustiq_cli::{parse_state, run, Command, Overrides, RunConfig};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "caustiq", version, about = "Caustic-based quantization of two-dimensional Hamiltonians")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    #[command(flatten)]
    options: Options,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Integrate one trajectory family and fit its caustic.
    Trace,
    /// Scan all separable seeds below E_max and compare with the matrix oracle.
    Spectrum,
    /// Wavefunction, potential, scale factor and action along one caustic arc.
    Arc,
    /// Quantum and classical action over the separable region.
    ActionSurface,
    /// Matrix diagonalization only.
    Oracle,
}

#[derive(Args)]
struct Options {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    energy: Option<f64>,
    #[arg(long, global = true)]
    e_max: Option<f64>,
    /// Quantum numbers as M,N.
    #[arg(long, global = true, value_parser = parse_state)]
    state: Option<(usize, usize)>,
    #[arg(long, global = true)]
    arc: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    grid: Option<usize>,
    #[arg(long, global = true)]
    hbar: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = match cli.command {
        Sub::Trace => Command::Trace,
        Sub::Spectrum => Command::Spectrum,
        Sub::Arc => Command::Arc,
        Sub::ActionSurface => Command::ActionSurface,
        Sub::Oracle => Command::Oracle,
    };
    let o = cli.options;
    let overrides = Overrides { energy: o.energy, e_max: o.e_max, state: o.state, arc: o.arc, out: o.out, grid: o.grid, hbar: o.hbar };
    let result = RunConfig::load(o.config.as_deref(), command, &overrides).and_then(|config| {
        let outputs = run(command, &config)?;
        outputs.write(&config.out)?;
        for (name, _) in &outputs.files {
            println!("{}", config.out.join(name).display());
        }
        outputs.status
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("caustiq: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
