//! Independent reference estimators and derivative checkers.

mod fd;
mod monte_carlo;
mod reference;

pub use fd::{fd_check, FdConfig, FdKind, FdReport};
pub use monte_carlo::{monte_carlo, sample_point, McConfig, McEstimate};
pub use reference::{load_reference, reference_cache_key, reference_statistics, ReferenceStats};
