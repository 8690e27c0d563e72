//! Experiment configuration, the shared offline/online pipeline and the
//! named recipes.

pub mod config;
pub mod pipeline;
mod recipes;

pub use config::ExperimentConfig;
pub use recipes::{
    ade_config, burgers_config, nonperiodic_config, path_nonlinearity, run_ade, run_ade_nonperiodic, run_burgers, run_steps, run_sweep,
    run_wave, steps_config, wave_config, Recipe, RecipeOutput, BURGERS_POD_RANKS, NONPERIODIC_SPACINGS,
};
