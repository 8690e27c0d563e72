use std::cell::Cell;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::system::{RomState, RomSystem};
use crate::fom::{integrate, IntegratorSpec, OdeSolution, OdeSystem, Sampling};
use crate::numerics::TransformKind;
use crate::{Error, Real, Result};

/// Consecutive degenerate output samples after which a regularized run is
/// abandoned.
pub const PERSISTENT_DEGENERACY: usize = 10;

/// Time series of a reduced run.
#[derive(Clone, Debug, PartialEq)]
pub struct RomTrajectory<T: Real> {
    pub times: Vec<T>,
    /// `r × m`
    pub alphas: DMatrix<T>,
    /// `q × m`
    pub paths: DMatrix<T>,
    pub residual_norms: Vec<T>,
    /// Accepted time steps.
    pub step_count: usize,
    /// Output samples at which the mass system had to be regularized.
    pub degenerate_samples: usize,
}

impl<T: Real> RomTrajectory<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, k: usize) -> RomState<T> {
        RomState::new(self.times[k], self.alphas.column(k).into_owned(), self.paths.column(k).into_owned())
    }

    /// Columns `t, alpha_1..alpha_r, p_1..p_q, residual_norm`.
    pub fn write_csv(&self, path: &Path, separator: &str) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        let mut head = vec!["t".to_string()];
        head.extend((1..=self.alphas.nrows()).map(|i| format!("alpha_{i}")));
        head.extend((1..=self.paths.nrows()).map(|i| format!("p_{i}")));
        head.push("residual_norm".into());
        writeln!(w, "{}", head.join(separator))?;
        for k in 0..self.len() {
            let row: Vec<String> = std::iter::once(self.times[k])
                .chain(self.alphas.column(k).iter().copied())
                .chain(self.paths.column(k).iter().copied())
                .chain(std::iter::once(self.residual_norms[k]))
                .map(|v| format!("{:.17e}", v.as_f64()))
                .collect();
            writeln!(w, "{}", row.join(separator))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Path prescribed as a function of time.
#[derive(Clone, Debug, PartialEq)]
pub enum PrescribedPath<T> {
    /// `offset + speed · t`, differentiated exactly.
    Affine { offset: T, speed: T },
    /// Piecewise-linear samples; derivative from central differences on the
    /// sample grid.
    Sampled { times: Vec<T>, values: Vec<T> },
}

impl<T: Real> PrescribedPath<T> {
    pub fn sampled(times: Vec<T>, values: Vec<T>) -> Result<Self> {
        if times.len() != values.len() || times.len() < 2 || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("sampled path needs at least two strictly increasing times".into()));
        }
        Ok(Self::Sampled { times, values })
    }

    fn locate(times: &[T], t: T) -> (usize, T) {
        let k = times.partition_point(|&s| s <= t).clamp(1, times.len() - 1) - 1;
        let s = (t - times[k]) / (times[k + 1] - times[k]);
        (k, s)
    }

    fn node_slope(times: &[T], values: &[T], k: usize) -> T {
        let m = times.len();
        let (a, b) = if k == 0 { (0, 1) } else if k == m - 1 { (m - 2, m - 1) } else { (k - 1, k + 1) };
        (values[b] - values[a]) / (times[b] - times[a])
    }

    pub fn value(&self, t: T) -> T {
        match self {
            Self::Affine { offset, speed } => *offset + *speed * t,
            Self::Sampled { times, values } => {
                let (k, s) = Self::locate(times, t);
                values[k] + s * (values[k + 1] - values[k])
            }
        }
    }

    pub fn derivative(&self, t: T) -> T {
        match self {
            Self::Affine { speed, .. } => *speed,
            Self::Sampled { times, values } => {
                let (k, s) = Self::locate(times, t);
                let a = Self::node_slope(times, values, k);
                let b = Self::node_slope(times, values, k + 1);
                a + s * (b - a)
            }
        }
    }
}

/// Coupled `(α, p)` system; remembers the time of the last evaluation so a
/// degeneracy can be reported where it happened.
struct Coupled<'a, T: Real> {
    sys: &'a RomSystem<T>,
    last_t: Cell<f64>,
}

impl<'a, T: Real> Coupled<'a, T> {
    fn split(&self, t: T, y: &[T]) -> RomState<T> {
        let r = self.sys.rank();
        RomState::new(t, DVector::from_column_slice(&y[..r]), DVector::from_column_slice(&y[r..]))
    }
}

fn restart_on_degeneracy(e: Error, t: f64) -> Error {
    match e {
        Error::DegenerateMass { .. } => {
            log::error!("{e}");
            Error::RestartRequired { t }
        }
        e => e,
    }
}

impl<T: Real> OdeSystem<T> for Coupled<'_, T> {
    fn dim(&self) -> usize {
        self.sys.rank() + self.sys.path_dim()
    }

    fn rhs(&self, t: T, y: &[T], out: &mut [T]) -> Result<()> {
        self.last_t.set(t.as_f64());
        let v = self.sys.rom_velocity(&self.split(t, y)).map_err(|e| restart_on_degeneracy(e, t.as_f64()))?;
        let r = self.sys.rank();
        out[..r].copy_from_slice(v.alpha_dot.as_slice());
        out[r..].copy_from_slice(v.p_dot.as_slice());
        Ok(())
    }

    fn constant_jacobian(&self) -> bool {
        self.sys.is_static_linear()
    }
}

/// Integrates the coupled reduced model from `state0` (at `t = 0`) to `t_end`,
/// sampling every `spec.tau`.
pub fn integrate_rom<T: Real>(sys: &RomSystem<T>, state0: &RomState<T>, spec: &IntegratorSpec, t_end: T) -> Result<RomTrajectory<T>> {
    if !state0.is_finite() {
        return Err(Error::InvalidArgument("initial reduced state is not finite".into()));
    }
    let ode = Coupled { sys, last_t: Cell::new(0.0) };
    let y0: Vec<T> = state0.alpha.iter().chain(state0.p.iter()).copied().collect();
    if y0.len() != ode.dim() {
        return Err(Error::Dimension("initial state does not match the reduced system".into()));
    }
    let sol = integrate(&ode, &y0, spec, t_end, Sampling::Uniform).map_err(|e| match e {
        Error::StepFailure { t, detail } => Error::StepFailure { t, detail: format!("{detail} (last evaluation at t = {})", ode.last_t.get()) },
        e => e,
    })?;
    let r = sys.rank();
    let q = sys.path_dim();
    let m = sol.times.len();
    let alphas = DMatrix::from_fn(r, m, |i, k| sol.states[k][i]);
    let paths = DMatrix::from_fn(q, m, |i, k| sol.states[k][r + i]);
    let mut residual_norms = Vec::with_capacity(m);
    let mut degenerate_samples = 0;
    let mut run = 0;
    for (k, &t) in sol.times.iter().enumerate() {
        let st = ode.split(t, &sol.states[k]);
        let v = sys.rom_velocity(&st).map_err(|e| restart_on_degeneracy(e, t.as_f64()))?;
        if v.degenerate {
            degenerate_samples += 1;
            run += 1;
            if run >= PERSISTENT_DEGENERACY {
                return Err(Error::RestartRequired { t: t.as_f64() });
            }
        } else {
            run = 0;
        }
        residual_norms.push(sys.residual_norm(&st, &v.alpha_dot, &v.p_dot)?);
    }
    Ok(RomTrajectory { times: sol.times, alphas, paths, residual_norms, step_count: sol.accepted_steps, degenerate_samples })
}

fn check_paths<T: Real>(sys: &RomSystem<T>, paths: &[PrescribedPath<T>]) -> Result<()> {
    if paths.len() != sys.path_dim() {
        return Err(Error::Dimension(format!("{} prescribed paths for {} path variables", paths.len(), sys.path_dim())));
    }
    Ok(())
}

fn path_at<T: Real>(paths: &[PrescribedPath<T>], t: T) -> (DVector<T>, DVector<T>) {
    (
        DVector::from_iterator(paths.len(), paths.iter().map(|p| p.value(t))),
        DVector::from_iterator(paths.len(), paths.iter().map(|p| p.derivative(t))),
    )
}

/// Shared driver for the coefficient-only systems along a prescribed path.
fn integrate_alpha<T: Real, S: OdeSystem<T>>(
    sys: &RomSystem<T>,
    ode: &S,
    alpha0: &DVector<T>,
    paths: &[PrescribedPath<T>],
    spec: &IntegratorSpec,
    t_end: T,
) -> Result<RomTrajectory<T>> {
    let sol: OdeSolution<T> = integrate(ode, alpha0.as_slice(), spec, t_end, Sampling::Uniform)?;
    let r = sys.rank();
    let m = sol.times.len();
    let alphas = DMatrix::from_fn(r, m, |i, k| sol.states[k][i]);
    let mut paths_out = DMatrix::zeros(paths.len(), m);
    let mut residual_norms = Vec::with_capacity(m);
    let mut adot = vec![T::zero(); r];
    for (k, &t) in sol.times.iter().enumerate() {
        let (p, pdot) = path_at(paths, t);
        paths_out.column_mut(k).copy_from(&p);
        ode.rhs(t, &sol.states[k], &mut adot)?;
        let st = RomState::new(t, alphas.column(k).into_owned(), p);
        residual_norms.push(sys.residual_norm(&st, &DVector::from_column_slice(&adot), &pdot)?);
    }
    Ok(RomTrajectory { times: sol.times, alphas, paths: paths_out, residual_norms, step_count: sol.accepted_steps, degenerate_samples: 0 })
}

struct AlongPath<'a, T: Real> {
    sys: &'a RomSystem<T>,
    paths: &'a [PrescribedPath<T>],
}

impl<T: Real> OdeSystem<T> for AlongPath<'_, T> {
    fn dim(&self) -> usize {
        self.sys.rank()
    }

    fn rhs(&self, t: T, y: &[T], out: &mut [T]) -> Result<()> {
        let (p, pdot) = path_at(self.paths, t);
        let st = RomState::new(t, DVector::from_column_slice(y), p);
        let a = self.sys.alpha_velocity_along(&st, &pdot)?;
        out.copy_from_slice(a.as_slice());
        Ok(())
    }
}

/// Coefficient rows of the coupled model with the path prescribed instead of
/// solved for.
pub fn integrate_rom_along_path<T: Real>(
    sys: &RomSystem<T>,
    alpha0: &DVector<T>,
    paths: &[PrescribedPath<T>],
    spec: &IntegratorSpec,
    t_end: T,
) -> Result<RomTrajectory<T>> {
    check_paths(sys, paths)?;
    if alpha0.len() != sys.rank() {
        return Err(Error::Dimension("initial coefficients do not match the system".into()));
    }
    integrate_alpha(sys, &AlongPath { sys, paths }, alpha0, paths, spec, t_end)
}

struct Frozen<'a, T: Real> {
    sys: &'a RomSystem<T>,
    path: Option<&'a PrescribedPath<T>>,
    /// `−⟨φ_i, ∂φ_j⟩` on the storage grid.
    n_ref: DMatrix<T>,
}

impl<T: Real> OdeSystem<T> for Frozen<'_, T> {
    fn dim(&self) -> usize {
        self.sys.rank()
    }

    fn rhs(&self, t: T, y: &[T], out: &mut [T]) -> Result<()> {
        let frame = &self.sys.frames()[0];
        let fam = frame.transform();
        let modes = frame.modes();
        let grid = fam.storage_grid();
        let (p, pdot) = self.path.map_or((T::zero(), T::zero()), |pp| (pp.value(t), pp.derivative(t)));
        let v = modes * DVector::from_column_slice(y);
        let z = fam.apply(p, v.as_slice())?;
        let mut f = vec![T::zero(); z.len()];
        self.sys.model().eval_rhs_into(t, &z, &mut f)?;
        let fref = fam.back_transform(p, &f)?;
        let rows = modes.nrows();
        for (i, o) in out.iter_mut().enumerate() {
            let phi = &modes.as_slice()[i * rows..(i + 1) * rows];
            let mut transport = T::zero();
            for (j, &a) in y.iter().enumerate() {
                transport += self.n_ref[(i, j)] * a;
            }
            *o = grid.dot(phi, &fref) - transport * pdot;
        }
        Ok(())
    }
}

/// Reference-frame model `α̇ = F_α − N D(α) ṗ` for a single isometric frame
/// with orthonormal modes; the right-hand side is pulled back with
/// `T(−p(t))`.
pub fn integrate_frozen_rom<T: Real>(
    sys: &RomSystem<T>,
    alpha0: &DVector<T>,
    path: Option<&PrescribedPath<T>>,
    spec: &IntegratorSpec,
    t_end: T,
) -> Result<RomTrajectory<T>> {
    if sys.frames().len() != 1 || !sys.frames()[0].transform().is_isometric() {
        return Err(Error::Unsupported("the frozen reduced model needs a single isometric frame".into()));
    }
    let frame = &sys.frames()[0];
    let shifted = frame.transform().kind() != TransformKind::Identity;
    if shifted != path.is_some() {
        return Err(Error::InvalidArgument("a prescribed path is needed exactly for shift frames".into()));
    }
    if alpha0.len() != sys.rank() {
        return Err(Error::Dimension("initial coefficients do not match the system".into()));
    }
    let grid = *frame.transform().storage_grid();
    let modes = frame.modes();
    let rows = modes.nrows();
    let r = modes.ncols();
    let cols: Vec<&[T]> = (0..r).map(|i| &modes.as_slice()[i * rows..(i + 1) * rows]).collect();
    let gram = DMatrix::from_fn(r, r, |i, j| grid.dot(cols[i], cols[j]));
    if (&gram - DMatrix::identity(r, r)).amax() > T::lit(1e-8) {
        return Err(Error::InvalidArgument("the frozen reduced model needs orthonormal modes".into()));
    }
    let d1 = sys.model().d1();
    let n_ref = DMatrix::from_fn(r, r, |i, j| if shifted { -grid.dot(cols[i], &d1.apply(cols[j])) } else { T::zero() });
    let ode = Frozen { sys, path, n_ref };
    let paths: Vec<PrescribedPath<T>> = path.into_iter().cloned().collect();
    integrate_alpha(sys, &ode, alpha0, &paths, spec, t_end)
}

/// Accepted steps of the coupled model from `state0` to `t_end` without
/// intermediate output (no step clipping at sample times).
pub fn count_rom_steps<T: Real>(sys: &RomSystem<T>, state0: &RomState<T>, spec: &IntegratorSpec, t_end: T) -> Result<usize> {
    let ode = Coupled { sys, last_t: Cell::new(0.0) };
    let y0: Vec<T> = state0.alpha.iter().chain(state0.p.iter()).copied().collect();
    Ok(integrate(&ode, &y0, spec, t_end, Sampling::EndOnly)?.accepted_steps)
}
