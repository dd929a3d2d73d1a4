use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lbtransport_cli::commands::{self, Failure, Output};
use lbtransport_cli::config::{load_config, Overrides};

#[derive(Parser)]
#[command(name = "lbt", version, about = "Multi-terminal Landauer-Buttiker transport")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the model and print its structure
    Validate(Common),
    /// Lead bands and bound states
    Bands(Common),
    /// T and S matrices on an energy grid
    Tmatrix(Common),
    /// Charge, energy and particle currents
    Currents(Common),
    /// Entropy production and the strict-positivity verdict
    Entropy(Common),
    /// Residuals of every scattering and transport invariant
    Verify(Common),
    /// Finite-lead quench compared with the Landauer-Buttiker currents
    Quench(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Primary CSV output; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    tol_quad: Option<f64>,
    #[arg(long)]
    tol_scatter: Option<f64>,
    #[arg(long)]
    lead_length: Option<usize>,
    /// Energy grid `a:b:n`
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Quench averaging window `T1:T2`
    #[arg(long)]
    window: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
    /// Initial scatterer occupation for the quench
    #[arg(long)]
    occupation: Option<f64>,
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::validation(format!("cannot write {}: {e}", path.display())))
}

fn run(command: Command) -> Result<(), Failure> {
    let (run, common): (fn(&_) -> Result<Output, Failure>, Common) = match command {
        Command::Validate(c) => (commands::validate, c),
        Command::Bands(c) => (commands::bands, c),
        Command::Tmatrix(c) => (commands::tmatrix, c),
        Command::Currents(c) => (commands::currents, c),
        Command::Entropy(c) => (commands::entropy, c),
        Command::Verify(c) => (commands::verify, c),
        Command::Quench(c) => (commands::quench, c),
    };
    let overrides = Overrides {
        tol_quad: common.tol_quad,
        tol_scatter: common.tol_scatter,
        lead_length: common.lead_length,
        grid: common.grid.clone(),
        window: common.window.clone(),
        samples: common.samples,
        occupation: common.occupation,
    };
    let cfg = load_config(&common.config, &overrides).map_err(|e| Failure::validation(e.to_string()))?;
    for d in &cfg.defaults {
        eprintln!("INFO: default {d}");
    }
    let output = run(&cfg)?;
    for w in &output.warnings {
        eprintln!("{w}");
    }
    match &common.out {
        Some(path) => {
            write_file(path, &output.csv)?;
            if let Some(summary) = &output.summary {
                let mut summary_path = path.clone().into_os_string();
                summary_path.push(".summary.json");
                write_file(Path::new(&summary_path), &format!("{summary}\n"))?;
                println!("{summary}");
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(output.csv.as_bytes());
            if let Some(summary) = &output.summary {
                eprintln!("{summary}");
            }
        }
    }
    match output.failure {
        Some(message) => Err(Failure {
            code: commands::EXIT_VERIFICATION,
            message,
        }),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code as u8)
        }
    }
}
