use nalgebra::DMatrix;

use super::SnapshotSet;
use crate::numerics::{GridFunction, TransformFamily};
use crate::{Error, Real, Result};

/// Exact solution of the periodic acoustic system with zero initial velocity:
/// `[ρ; v](t) = [1; 1]·q(ξ − t) + [1; −1]·q(ξ + t)` with `q = ρ0 / 2`.
pub fn analytic_wave_snapshots<T: Real>(rho0: &GridFunction<T>, times: &[T]) -> Result<SnapshotSet<T>> {
    let grid = *rho0.grid();
    if !grid.is_periodic() || rho0.components() != 1 {
        return Err(Error::InvalidArgument("analytic wave solution needs a scalar density on a periodic grid".into()));
    }
    let shift = TransformFamily::periodic_shift(grid)?;
    let half: Vec<T> = rho0.values().iter().map(|v| *v * T::lit(0.5)).collect();
    let n = grid.n();
    let mut data = DMatrix::zeros(2 * n, times.len());
    for (j, &t) in times.iter().enumerate() {
        let right = shift.apply(t, &half)?;
        let left = shift.apply(-t, &half)?;
        for k in 0..n {
            data[(k, j)] = right[k] + left[k];
            data[(n + k, j)] = right[k] - left[k];
        }
    }
    SnapshotSet::new(grid, 2, times.to_vec(), data, "linear_wave_analytic")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Grid;

    fn rho0(g: Grid<f64>) -> GridFunction<f64> {
        GridFunction::from_fn(g, |x: f64| (-((x - 0.5) / 0.1).powi(2)).exp())
    }

    #[test]
    fn initial_state_is_exact() {
        let g = Grid::periodic(200, 0.0, 1.0).unwrap();
        let r = rho0(g);
        let s = analytic_wave_snapshots(&r, &[0.0]).unwrap();
        assert_eq!(&s.column(0)[..200], r.values().as_slice());
        assert!(s.column(0)[200..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn half_period_symmetry() {
        let g = Grid::periodic(200, 0.0, 1.0).unwrap();
        let r = rho0(g);
        let s = analytic_wave_snapshots(&r, &[0.5]).unwrap();
        let shifted = TransformFamily::periodic_shift(g).unwrap().apply(-0.5, r.values().as_slice()).unwrap();
        for k in 0..200 {
            assert!((s.column(0)[k] - shifted[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn mass_is_conserved() {
        let g = Grid::periodic(200, 0.0, 1.0).unwrap();
        let times: Vec<f64> = (0..=20).map(|k| k as f64 * 0.0537).collect();
        let s = analytic_wave_snapshots(&rho0(g), &times).unwrap();
        let one = vec![1.0; 200];
        let m0 = g.dot(&s.column(0)[..200], &one);
        for j in 0..times.len() {
            assert!((g.dot(&s.column(j)[..200], &one) - m0).abs() < 1e-12);
        }
    }
}
