//! Reconstruction, error metrics, bounds, and comparison studies.

mod bound;
mod reconstruct;
mod study;
mod table;

pub use bound::{error_bound, pointwise_error_norms, BoundParams, ErrorReport};
pub use reconstruct::{interpolate_state, reconstruct_decomposition, reconstruct_trajectory};
pub use study::{evaluate_rom, parameter_sweep, step_count_study, step_table, StepCountRow, SweepEntry, SweepResult, SweepRom};
pub use table::{format_number, Table};
