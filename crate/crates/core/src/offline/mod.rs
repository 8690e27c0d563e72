//! Mode and path identification from snapshot data.

mod decomposition;
mod io;
mod path;
mod pod;
mod virtual_fill;

pub use decomposition::{Decomposition, Frame};
pub use path::{estimate_path, PathEstimate};
pub use pod::{
    compute_pod, compute_spod_multi_frame, compute_spod_single_frame, compute_spod_virtual, FrameSpec, DEFAULT_SWEEPS,
};
pub use virtual_fill::DEFAULT_REFINEMENT_PASSES;
