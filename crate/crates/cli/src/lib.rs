//! Command-line front end: configurations, expressions, JSON output and the
//! verification suites.

pub mod config;
pub mod expr;
pub mod output;
pub mod run;

pub use config::CurveConfig;
pub use run::{run_compute, run_verify, run_wkb, RunOptions, Suite, VerifyReport};

use spectral_core::Error;

/// Exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    /// Curve and configuration problems are input errors; everything else means the
    /// engine caught itself in an inconsistency.
    pub fn from_core(e: Error) -> Self {
        match e {
            Error::MalformedInput(_)
            | Error::UnsupportedRamification(_)
            | Error::UnsupportedCurve(_)
            | Error::Mode(_)
            | Error::DegenerateCurve(_)
            | Error::NotASpectralCurve(_)
            | Error::BadSheet
            | Error::Unsupported(_) => CliError::Input(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }

    pub fn context(self, what: &str) -> Self {
        match self {
            CliError::Input(m) => CliError::Input(format!("{what}: {m}")),
            CliError::Internal(m) => CliError::Internal(format!("{what}: {m}")),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

/// Caps the global thread pool from `SPECTRAL_REC_THREADS`, if set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("SPECTRAL_REC_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        CliError::Input(format!(
            "SPECTRAL_REC_THREADS must be a positive integer, got {v:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Internal(format!("thread pool: {e}")))
}
