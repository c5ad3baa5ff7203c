//! Config-driven experiment runner: sweeps over `N_s`, estimator and level,
//! writes `results.csv` and `summary.txt`.

mod config;
mod diagnostics;
mod run;

pub use config::{ExperimentConfig, ReferenceSource, THREADS_ENV};
pub use diagnostics::{diagnose, Diagnostics};
pub use run::{exit_code, run, run_file, ResultRow, RunOutcome, CSV_HEADER};

/// Exit status of a successful run.
pub const EXIT_OK: i32 = 0;
/// Exit status when the configuration cannot be used; nothing is written.
pub const EXIT_CONFIG: i32 = 2;
/// Exit status after a solver or map failure; completed rows are kept.
pub const EXIT_NUMERICAL: i32 = 3;
