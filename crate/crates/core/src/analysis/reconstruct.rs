use nalgebra::DVector;

use crate::fom::SnapshotSet;
use crate::offline::Decomposition;
use crate::rom::{RomState, RomSystem, RomTrajectory};
use crate::{Error, Real, Result};

/// Decomposition evaluated at its own sample times.
pub fn reconstruct_decomposition<T: Real>(dec: &Decomposition<T>) -> Result<SnapshotSet<T>> {
    dec.reconstruct_snapshots("reconstruction")
}

/// Reduced state at `t`, linearly interpolated between stored samples.
pub fn interpolate_state<T: Real>(traj: &RomTrajectory<T>, t: T) -> Result<RomState<T>> {
    let (start, end) = match (traj.times.first(), traj.times.last()) {
        (Some(a), Some(b)) => (*a, *b),
        _ => return Err(Error::InvalidArgument("empty trajectory".into())),
    };
    let slack = T::lit(1e-12) * (T::one() + end.abs());
    if !(t >= start - slack && t <= end + slack) {
        return Err(Error::OutOfRange { t: t.as_f64(), start: start.as_f64(), end: end.as_f64() });
    }
    let m = traj.len();
    if m == 1 {
        return Ok(traj.state(0));
    }
    let k = traj.times.partition_point(|&s| s <= t).clamp(1, m - 1) - 1;
    let (t0, t1) = (traj.times[k], traj.times[k + 1]);
    if (t - t0).abs() <= slack {
        return Ok(RomState { t, ..traj.state(k) });
    }
    if (t - t1).abs() <= slack {
        return Ok(RomState { t, ..traj.state(k + 1) });
    }
    let s = (t - t0) / (t1 - t0);
    let mix = |a: DVector<T>, b: DVector<T>| &a + (b - &a) * s;
    Ok(RomState::new(
        t,
        mix(traj.alphas.column(k).into_owned(), traj.alphas.column(k + 1).into_owned()),
        mix(traj.paths.column(k).into_owned(), traj.paths.column(k + 1).into_owned()),
    ))
}

/// `Σ α_i(t) T_i(p_i(t)) φ_i` at each requested time.
pub fn reconstruct_trajectory<T: Real>(sys: &RomSystem<T>, traj: &RomTrajectory<T>, times: &[T]) -> Result<SnapshotSet<T>> {
    let states = times
        .iter()
        .map(|&t| sys.reconstruct_state(&interpolate_state(traj, t)?))
        .collect::<Result<Vec<_>>>()?;
    SnapshotSet::from_states(*sys.model().grid(), sys.model().components(), times.to_vec(), &states, "rom")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fom::{FomModel, IntegratorSpec, ModelKind};
    use crate::numerics::{Grid, GridFunction, TransformFamily};
    use crate::offline::compute_pod;
    use crate::rom::{integrate_rom, PhaseCondition};
    use nalgebra::DMatrix;

    #[test]
    fn identity_decomposition_is_a_matrix_product() {
        let g = Grid::periodic(16, 0.0, 1.0).unwrap();
        let states: Vec<Vec<f64>> = (0..5).map(|j| g.nodes().iter().map(|x| (x * (j + 1) as f64).sin()).collect()).collect();
        let s = SnapshotSet::from_states(g, 1, (0..5).map(|j| j as f64 * 0.1).collect(), &states, "x").unwrap();
        let dec = compute_pod(&s, 3).unwrap();
        let rec = reconstruct_decomposition(&dec).unwrap();
        let f = &dec.frames()[0];
        let product = f.modes() * f.coefficients();
        assert!((rec.data() - product).amax() < 1e-14);
    }

    fn transport_setup() -> (RomSystem<f64>, RomTrajectory<f64>, GridFunction<f64>) {
        let g = Grid::periodic(200, 0.0, 1.0).unwrap();
        let ic = GridFunction::from_fn(g, |x: f64| (-((x - 0.5) / 0.1).powi(2)).exp());
        let m = FomModel::new(ModelKind::Advection, 1.0, 0.0, g, ic.clone(), None).unwrap();
        let mode = DMatrix::from_column_slice(200, 1, ic.values().as_slice());
        let sys = RomSystem::new(m, vec![(TransformFamily::periodic_shift(g).unwrap(), mode)], PhaseCondition::Residual).unwrap();
        let st = sys.project_initial_condition(&ic, &[0.0]).unwrap().state;
        let traj = integrate_rom(&sys, &st, &IntegratorSpec::trapezoid(0.01), 0.5).unwrap();
        (sys, traj, ic)
    }

    #[test]
    fn exact_transport_is_reproduced() {
        let (sys, traj, ic) = transport_setup();
        let fam = TransformFamily::periodic_shift(*ic.grid()).unwrap();
        let times = vec![0.0, 0.123, 0.25, 0.5];
        let rec = reconstruct_trajectory(&sys, &traj, &times).unwrap();
        for (k, &t) in times.iter().enumerate() {
            let truth = fam.apply(t, ic.values().as_slice()).unwrap();
            let err = rec.column(k).iter().zip(&truth).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-6, "t = {t}: {err}");
        }
    }

    #[test]
    fn zero_coefficients_give_zero_field_and_extrapolation_fails() {
        let (sys, mut traj, _) = transport_setup();
        traj.alphas.fill(0.0);
        let rec = reconstruct_trajectory(&sys, &traj, &[0.2]).unwrap();
        assert!(rec.column(0).iter().all(|v| *v == 0.0));
        assert!(matches!(reconstruct_trajectory(&sys, &traj, &[0.6]), Err(Error::OutOfRange { .. })));
    }
}
