//! Full-order models, time integrators and snapshot sets.

mod integrate;
mod model;
mod snapshots;
mod wave;

pub use integrate::{integrate, step_count, IntegratorSpec, Jacobian, NewtonSpec, OdeSolution, OdeSystem, Sampling, Scheme};
pub use model::{finite_difference_jacobian, FomModel, InflowPulse, ModelKind, Term};
pub use snapshots::{relative_error, relative_error_data, time_weight, trajectory_norm, SnapshotSet};
#[allow(unused_imports)]
pub(crate) use snapshots::{read_header, read_values, write_header, write_values};
pub use wave::analytic_wave_snapshots;

use crate::{Real, Result};

/// Simulates the model from its initial condition and samples every `tau`.
pub fn integrate_fom<T: Real>(model: &FomModel<T>, spec: &IntegratorSpec, t_end: T) -> Result<SnapshotSet<T>> {
    let mut y0: Vec<T> = model.initial_condition().values().iter().copied().collect();
    model.enforce_boundary(T::zero(), &mut y0);
    let sol = integrate(model, &y0, spec, t_end, Sampling::Uniform)?;
    SnapshotSet::from_states(*model.grid(), model.components(), sol.times, &sol.states, model.kind().tag())
}
