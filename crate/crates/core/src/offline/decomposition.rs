use nalgebra::DMatrix;

use crate::fom::{relative_error_data, SnapshotSet};
use crate::numerics::{DiffOp, DiffOrder, Grid, GridFunction, TransformFamily};
use crate::{Error, Real, Result};

/// Modes sharing one transformation family and one path.
#[derive(Clone, Debug)]
pub struct Frame<T: Real> {
    transform: TransformFamily<T>,
    path: Vec<T>,
    /// Column `i` is mode `i` on the storage grid (all components stacked).
    modes: DMatrix<T>,
    /// `rank × m`; column `k` holds the coefficients at sample `k`.
    coefficients: DMatrix<T>,
    singular_values: Vec<T>,
}

impl<T: Real> Frame<T> {
    pub fn new(
        transform: TransformFamily<T>,
        path: Vec<T>,
        modes: DMatrix<T>,
        coefficients: DMatrix<T>,
        singular_values: Vec<T>,
    ) -> Result<Self> {
        let ns = transform.storage_grid().n();
        if modes.nrows() == 0 || modes.nrows() % ns != 0 {
            return Err(Error::Dimension(format!("mode length {} is not a multiple of {ns}", modes.nrows())));
        }
        if coefficients.nrows() != modes.ncols() || coefficients.ncols() != path.len() {
            return Err(Error::Dimension(format!(
                "coefficients are {}x{}, expected {}x{}",
                coefficients.nrows(),
                coefficients.ncols(),
                modes.ncols(),
                path.len()
            )));
        }
        if modes.iter().chain(coefficients.iter()).chain(path.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("frame data must be finite".into()));
        }
        Ok(Self { transform, path, modes, coefficients, singular_values })
    }

    pub fn transform(&self) -> &TransformFamily<T> {
        &self.transform
    }

    pub fn path(&self) -> &[T] {
        &self.path
    }

    pub fn rank(&self) -> usize {
        self.modes.ncols()
    }

    pub fn components(&self) -> usize {
        self.modes.nrows() / self.transform.storage_grid().n()
    }

    pub fn modes(&self) -> &DMatrix<T> {
        &self.modes
    }

    pub fn mode_values(&self, i: usize) -> &[T] {
        let rows = self.modes.nrows();
        &self.modes.as_slice()[i * rows..(i + 1) * rows]
    }

    pub fn mode(&self, i: usize) -> GridFunction<T> {
        GridFunction::new(*self.transform.storage_grid(), self.components(), self.modes.column(i).into_owned())
            .expect("modes are validated at construction")
    }

    pub fn coefficients(&self) -> &DMatrix<T> {
        &self.coefficients
    }

    pub fn singular_values(&self) -> &[T] {
        &self.singular_values
    }

    /// `Σ_i α_i(t_k) φ_i` on the storage grid.
    pub fn storage_field(&self, k: usize) -> Vec<T> {
        let v = &self.modes * self.coefficients.column(k);
        v.as_slice().to_vec()
    }

    /// Contribution `T(p(t_k)) Σ_i α_i(t_k) φ_i` of this frame at sample `k`.
    pub fn physical_field(&self, k: usize) -> Result<Vec<T>> {
        self.transform.apply(self.path[k], &self.storage_field(k))
    }
}

/// Sum of transformed frames approximating a snapshot set.
#[derive(Clone, Debug)]
pub struct Decomposition<T: Real> {
    grid: Grid<T>,
    components: usize,
    times: Vec<T>,
    frames: Vec<Frame<T>>,
    offline_error: T,
    sweep_errors: Vec<T>,
}

impl<T: Real> Decomposition<T> {
    /// Assembles frames fitted to `snapshots` and records their relative error.
    pub fn from_frames(snapshots: &SnapshotSet<T>, frames: Vec<Frame<T>>) -> Result<Self> {
        let mut dec = Self {
            grid: *snapshots.grid(),
            components: snapshots.components(),
            times: snapshots.times().to_vec(),
            frames,
            offline_error: T::zero(),
            sweep_errors: Vec::new(),
        };
        dec.validate()?;
        dec.offline_error = dec.error_against(snapshots)?;
        Ok(dec)
    }

    pub(crate) fn from_parts(
        grid: Grid<T>,
        components: usize,
        times: Vec<T>,
        frames: Vec<Frame<T>>,
        offline_error: T,
        sweep_errors: Vec<T>,
    ) -> Result<Self> {
        let dec = Self { grid, components, times, frames, offline_error, sweep_errors };
        dec.validate()?;
        Ok(dec)
    }

    fn validate(&self) -> Result<()> {
        if self.frames.is_empty() {
            return Err(Error::InvalidArgument("a decomposition needs at least one frame".into()));
        }
        for f in &self.frames {
            if !f.transform.grid().same_as(&self.grid) {
                return Err(Error::Dimension("frame transform lives on a different grid".into()));
            }
            if f.components() != self.components || f.path.len() != self.times.len() {
                return Err(Error::Dimension("frame shape does not match the snapshot set".into()));
            }
        }
        Ok(())
    }

    pub(crate) fn set_sweep_errors(&mut self, errors: Vec<T>) {
        self.sweep_errors = errors;
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn frames(&self) -> &[Frame<T>] {
        &self.frames
    }

    pub fn total_rank(&self) -> usize {
        self.frames.iter().map(Frame::rank).sum()
    }

    /// Relative space-time error of the reconstruction at the sample times.
    pub fn offline_error(&self) -> T {
        self.offline_error
    }

    /// Offline error after each sweep (multi-frame decompositions only).
    pub fn sweep_errors(&self) -> &[T] {
        &self.sweep_errors
    }

    /// Reconstruction at sample `k`.
    pub fn state(&self, k: usize) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); self.components * self.grid.n()];
        for f in &self.frames {
            for (o, v) in out.iter_mut().zip(f.physical_field(k)?) {
                *o += v;
            }
        }
        Ok(out)
    }

    /// Reconstruction at every sample time as a `c·n × m` matrix.
    pub fn reconstruct_samples(&self) -> Result<DMatrix<T>> {
        let rows = self.components * self.grid.n();
        let mut data = DMatrix::zeros(rows, self.times.len());
        for k in 0..self.times.len() {
            data.column_mut(k).copy_from_slice(&self.state(k)?);
        }
        Ok(data)
    }

    pub fn reconstruct_snapshots(&self, tag: &str) -> Result<SnapshotSet<T>> {
        SnapshotSet::new(self.grid, self.components, self.times.clone(), self.reconstruct_samples()?, tag)
    }

    pub fn error_against(&self, snapshots: &SnapshotSet<T>) -> Result<T> {
        if snapshots.len() != self.times.len() || snapshots.components() != self.components {
            return Err(Error::Dimension("snapshot set does not match the decomposition".into()));
        }
        relative_error_data(&self.grid, &self.times, snapshots.data(), &self.reconstruct_samples()?)
    }

    /// Largest coefficient magnitude and largest `‖D1 φ_i‖` over all frames,
    /// for checking boundedness of the fit after the fact.
    pub fn diagnostics(&self) -> Result<(T, T)> {
        let mut max_coef = T::zero();
        let mut max_slope = T::zero();
        for f in &self.frames {
            for v in f.coefficients.iter() {
                max_coef = max_coef.max(v.abs());
            }
            let sg = *f.transform.storage_grid();
            let order = if sg.is_periodic() { DiffOrder::D1Sixth } else { DiffOrder::D1Second };
            let d1 = DiffOp::new(order, sg)?;
            for i in 0..f.rank() {
                let d = d1.apply(f.mode_values(i));
                max_slope = max_slope.max(sg.norm(&d));
            }
        }
        Ok((max_coef, max_slope))
    }
}
