//! Reduced-order models with transformed modes and their time integration.

mod integrate;
mod precomputed;
mod system;

pub use integrate::{count_rom_steps, integrate_frozen_rom, integrate_rom, integrate_rom_along_path, PrescribedPath, RomTrajectory, PERSISTENT_DEGENERACY};
pub use precomputed::{LinearBlock, PrecomputedOperators, QuadraticBlock};
pub use system::{
    InitialProjection, MassBlocks, PhaseCondition, PhaseDefects, Regularization, RhsBlocks, RomFrame, RomState, RomSystem, Velocity,
    DEGENERACY_THRESHOLD,
};

#[cfg(test)]
mod tests;
