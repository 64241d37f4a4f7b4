use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spectral_rec::{
    configure_threads, run, CliError, CurveConfig, RunOptions, Suite, EXIT_OK, EXIT_VERIFICATION,
};

#[derive(Parser)]
#[command(
    name = "spectral-rec",
    version,
    about = "Topological recursion and WKB quantization on rational spectral curves"
)]
struct Cli {
    /// Halve y, so that eta = z^2 dz on x = z^2, y = z.
    #[arg(long, global = true)]
    h_model: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute correlators, free energies and the WKB expansion; write JSON files.
    Compute {
        config: PathBuf,
        /// Output directory (default: out/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run verification suites and print a JSON report.
    Verify {
        config: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        /// Directory holding a previously computed w.json (default: out/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute the WKB expansion through S_M and print it.
    Wkb {
        config: PathBuf,
        #[arg(long)]
        order: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("spectral-rec: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    configure_threads()?;
    let h_model = cli.h_model;
    match cli.command {
        Command::Compute { config, out } => {
            let config = CurveConfig::load(&config)?;
            let done = run::run_compute(&config, &RunOptions { h_model, out })?;
            println!("wrote {}", done.dir.display());
            Ok(EXIT_OK)
        }
        Command::Verify { config, suite, out } => {
            let config = CurveConfig::load(&config)?;
            let report = run::run_verify(&config, suite, &RunOptions { h_model, out })?;
            print!("{}", report.to_json());
            for c in report.failures() {
                eprintln!("FAIL {}: {}", c.name, c.detail.as_deref().unwrap_or(""));
            }
            Ok(if report.passed {
                EXIT_OK
            } else {
                EXIT_VERIFICATION
            })
        }
        Command::Wkb { config, order, out } => {
            let config = CurveConfig::load(&config)?;
            let doc = run::run_wkb(&config, order, &RunOptions { h_model, out })?;
            print!("{}", doc.to_json());
            Ok(EXIT_OK)
        }
    }
}
