use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::precomputed::PrecomputedOperators;
use crate::fom::FomModel;
use crate::numerics::{GridFunction, TransformFamily, TransformKind};
use crate::offline::Decomposition;
use crate::{Error, Real, Result};

/// Equations closing the path rows of the coupled reduced model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseCondition {
    /// Residual minimization over `(α̇, ṗ)`.
    #[default]
    Residual,
    /// Minimal temporal change of the frozen solution.
    Freeze,
    /// Minimal temporal change of the reduced state.
    FreezeReduced,
}

/// What to do when the scaled mass system is (numerically) singular.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regularization {
    /// Fail with a degenerate-mass error.
    #[default]
    Off,
    /// Add this multiple of the identity to the path block.
    Fixed(f64),
    /// `1e-10 · trace(path block) / q`.
    Auto,
}

/// Smallest-to-largest singular value ratio below which the scaled system
/// counts as singular.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct RomFrame<T: Real> {
    transform: TransformFamily<T>,
    modes: DMatrix<T>,
    path_index: Option<usize>,
}

impl<T: Real> RomFrame<T> {
    pub fn transform(&self) -> &TransformFamily<T> {
        &self.transform
    }

    /// Modes on the storage grid, one per column.
    pub fn modes(&self) -> &DMatrix<T> {
        &self.modes
    }

    pub fn rank(&self) -> usize {
        self.modes.ncols()
    }

    /// Index of this frame's path variable; `None` for identity frames.
    pub fn path_index(&self) -> Option<usize> {
        self.path_index
    }

    fn mode(&self, i: usize) -> &[T] {
        let rows = self.modes.nrows();
        &self.modes.as_slice()[i * rows..(i + 1) * rows]
    }
}

/// Reduced state `(t, α, p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RomState<T: Real> {
    pub t: T,
    pub alpha: DVector<T>,
    pub p: DVector<T>,
}

impl<T: Real> RomState<T> {
    pub fn new(t: T, alpha: DVector<T>, p: DVector<T>) -> Self {
        Self { t, alpha, p }
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.alpha.iter().chain(self.p.iter()).all(|v| v.is_finite())
    }
}

/// Gram blocks on the mode level: `n` and `m_p` are `r × r`; grouping into
/// path columns happens through `D(α)` in [`RomSystem::scaling`].
#[derive(Clone, Debug, PartialEq)]
pub struct MassBlocks<T: Real> {
    /// `⟨T φ_i, T φ_j⟩`
    pub m_alpha: DMatrix<T>,
    /// `⟨T φ_i, T' φ_j⟩`
    pub n: DMatrix<T>,
    /// `⟨T' φ_i, T' φ_j⟩`
    pub m_p: DMatrix<T>,
}

impl<T: Real> MassBlocks<T> {
    /// Full `2r × 2r` Gram matrix `[[M_α, N], [Nᵀ, M_p]]`.
    pub fn block_matrix(&self) -> DMatrix<T> {
        let r = self.m_alpha.nrows();
        let mut m = DMatrix::zeros(2 * r, 2 * r);
        m.view_mut((0, 0), (r, r)).copy_from(&self.m_alpha);
        m.view_mut((0, r), (r, r)).copy_from(&self.n);
        m.view_mut((r, 0), (r, r)).copy_from(&self.n.transpose());
        m.view_mut((r, r), (r, r)).copy_from(&self.m_p);
        m
    }
}

/// Projected right-hand side; `f_p` is tested mode by mode (length `r`).
#[derive(Clone, Debug, PartialEq)]
pub struct RhsBlocks<T: Real> {
    pub f_alpha: DVector<T>,
    pub f_p: DVector<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Velocity<T: Real> {
    pub alpha_dot: DVector<T>,
    pub p_dot: DVector<T>,
    /// Set when the system was singular and regularized.
    pub degenerate: bool,
}

/// Left-minus-right defects of the three phase conditions.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseDefects<T: Real> {
    pub psi_res: DVector<T>,
    pub psi_freeze: DVector<T>,
    pub psi_freeze_reduced: DVector<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitialProjection<T: Real> {
    pub state: RomState<T>,
    /// `‖z0 − Σ α_i T_i φ_i‖`
    pub j_iv: T,
}

/// Transformed modes and their path derivatives at one `p`.
struct Fields<T> {
    psi: Vec<Vec<T>>,
    dpsi: Vec<Option<Vec<T>>>,
}

/// Reduced model with transformed modes.
#[derive(Clone, Debug)]
pub struct RomSystem<T: Real> {
    model: FomModel<T>,
    frames: Vec<RomFrame<T>>,
    layout: Vec<(usize, usize)>,
    q: usize,
    phase: PhaseCondition,
    regularization: Regularization,
    shortcuts: Option<PrecomputedOperators<T>>,
}

impl<T: Real> RomSystem<T> {
    /// One frame per `(transform, modes)` pair. Every non-identity frame owns
    /// one path variable, in frame order.
    pub fn new(model: FomModel<T>, frames: Vec<(TransformFamily<T>, DMatrix<T>)>, phase: PhaseCondition) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::InvalidArgument("a reduced model needs at least one frame".into()));
        }
        let c = model.components();
        let mut out = Vec::with_capacity(frames.len());
        let mut layout = Vec::new();
        let mut q = 0;
        for (f, (transform, modes)) in frames.into_iter().enumerate() {
            if !transform.grid().same_as(model.grid()) {
                return Err(Error::Dimension(format!("frame {f} lives on a different grid than the model")));
            }
            let rows = c * transform.storage_grid().n();
            if modes.nrows() != rows || modes.ncols() == 0 {
                return Err(Error::Dimension(format!(
                    "frame {f}: modes are {}x{}, expected {rows} rows and at least one column",
                    modes.nrows(),
                    modes.ncols()
                )));
            }
            let path_index = if transform.kind() == TransformKind::Identity {
                None
            } else {
                q += 1;
                Some(q - 1)
            };
            layout.extend((0..modes.ncols()).map(|l| (f, l)));
            out.push(RomFrame { transform, modes, path_index });
        }
        Ok(Self { model, frames: out, layout, q, phase, regularization: Regularization::Off, shortcuts: None })
    }

    pub fn from_decomposition(model: FomModel<T>, dec: &Decomposition<T>, phase: PhaseCondition) -> Result<Self> {
        let frames = dec.frames();
        for (a, fa) in frames.iter().enumerate() {
            for fb in &frames[a + 1..] {
                if fa.transform().kind() != TransformKind::Identity && fa.transform() == fb.transform() && fa.path() == fb.path() {
                    log::warn!("frames share transform and path; grouping their modes into one frame avoids degenerate path rows");
                }
            }
        }
        Self::new(model, frames.iter().map(|f| (f.transform().clone(), f.modes().clone())).collect(), phase)
    }

    pub fn with_phase(mut self, phase: PhaseCondition) -> Self {
        self.phase = phase;
        self
    }

    pub fn with_regularization(mut self, regularization: Regularization) -> Result<Self> {
        if let Regularization::Fixed(l) = regularization {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::InvalidArgument(format!("regularization must be non-negative, got {l}")));
            }
        }
        self.regularization = regularization;
        Ok(self)
    }

    /// Switches to the path-independent operators. Needs a single
    /// periodic-shift frame on a shift-equivariant model.
    pub fn with_shortcuts(mut self) -> Result<Self> {
        let eligible = self.frames.len() == 1
            && self.frames[0].transform.kind() == TransformKind::PeriodicShift
            && self.model.is_shift_equivariant();
        if !eligible {
            return Err(Error::Unsupported("precomputed operators need one periodic-shift frame on a periodic model".into()));
        }
        self.shortcuts = Some(PrecomputedOperators::build(&self.model, &self.frames[0].modes)?);
        Ok(self)
    }

    /// Same modes and operators with different model parameters.
    pub fn with_model(mut self, model: FomModel<T>) -> Result<Self> {
        if model.kind() != self.model.kind() || !model.grid().same_as(self.model.grid()) {
            return Err(Error::InvalidArgument("replacement model must have the same kind and grid".into()));
        }
        self.model = model;
        Ok(self)
    }

    pub fn model(&self) -> &FomModel<T> {
        &self.model
    }

    pub fn frames(&self) -> &[RomFrame<T>] {
        &self.frames
    }

    pub fn phase(&self) -> PhaseCondition {
        self.phase
    }

    pub fn regularization(&self) -> Regularization {
        self.regularization
    }

    pub fn shortcuts(&self) -> Option<&PrecomputedOperators<T>> {
        self.shortcuts.as_ref()
    }

    /// Global mode index → `(frame, local index)`.
    pub fn mode_layout(&self) -> &[(usize, usize)] {
        &self.layout
    }

    pub fn rank(&self) -> usize {
        self.layout.len()
    }

    pub fn path_dim(&self) -> usize {
        self.q
    }

    fn path_of_mode(&self, i: usize) -> Option<usize> {
        self.frames[self.layout[i].0].path_index
    }

    fn check_state(&self, state: &RomState<T>) -> Result<()> {
        if state.alpha.len() != self.rank() || state.p.len() != self.q {
            return Err(Error::Dimension(format!(
                "state has {} coefficients and {} path values, system {} and {}",
                state.alpha.len(),
                state.p.len(),
                self.rank(),
                self.q
            )));
        }
        Ok(())
    }

    fn check_path(&self, p: &[T]) -> Result<()> {
        if p.len() != self.q {
            return Err(Error::Dimension(format!("path has {} entries, system {}", p.len(), self.q)));
        }
        Ok(())
    }

    fn fields(&self, p: &[T]) -> Result<Fields<T>> {
        let r = self.rank();
        let mut psi = Vec::with_capacity(r);
        let mut dpsi = Vec::with_capacity(r);
        for &(f, l) in &self.layout {
            let frame = &self.frames[f];
            let eta = frame.path_index.map_or(T::zero(), |k| p[k]);
            let v = frame.transform.apply(eta, frame.mode(l))?;
            dpsi.push(frame.path_index.map(|_| {
                let mut d = self.model.d1().apply(&v);
                d.iter_mut().for_each(|x| *x = -*x);
                d
            }));
            psi.push(v);
        }
        Ok(Fields { psi, dpsi })
    }

    fn dot(&self, u: &[T], v: &[T]) -> T {
        self.model.grid().dot(u, v)
    }

    fn mass_from_fields(&self, fl: &Fields<T>) -> MassBlocks<T> {
        let r = self.rank();
        let mut m_alpha = DMatrix::zeros(r, r);
        let mut n = DMatrix::zeros(r, r);
        let mut m_p = DMatrix::zeros(r, r);
        for i in 0..r {
            for j in 0..r {
                if j >= i {
                    m_alpha[(i, j)] = self.dot(&fl.psi[i], &fl.psi[j]);
                    m_alpha[(j, i)] = m_alpha[(i, j)];
                }
                if let Some(dj) = &fl.dpsi[j] {
                    n[(i, j)] = self.dot(&fl.psi[i], dj);
                    if j >= i {
                        if let Some(di) = &fl.dpsi[i] {
                            m_p[(i, j)] = self.dot(di, dj);
                            m_p[(j, i)] = m_p[(i, j)];
                        }
                    }
                }
            }
        }
        MassBlocks { m_alpha, n, m_p }
    }

    fn field_sum(&self, fl: &Fields<T>, alpha: &DVector<T>) -> Vec<T> {
        let mut z = vec![T::zero(); self.model.dim()];
        for (a, psi) in alpha.iter().zip(&fl.psi) {
            for (zk, v) in z.iter_mut().zip(psi) {
                *zk += *a * *v;
            }
        }
        z
    }

    fn full_rhs(&self, t: T, z: &[T]) -> Result<Vec<T>> {
        let mut f = vec![T::zero(); z.len()];
        self.model.eval_rhs_into(t, z, &mut f)?;
        Ok(f)
    }

    fn rhs_from_fields(&self, fl: &Fields<T>, state: &RomState<T>) -> Result<RhsBlocks<T>> {
        let z = self.field_sum(fl, &state.alpha);
        let f = self.full_rhs(state.t, &z)?;
        let r = self.rank();
        let f_alpha = DVector::from_fn(r, |i, _| self.dot(&fl.psi[i], &f));
        let f_p = DVector::from_fn(r, |i, _| fl.dpsi[i].as_ref().map_or(T::zero(), |d| self.dot(d, &f)));
        Ok(RhsBlocks { f_alpha, f_p })
    }

    /// Mass blocks at path value `p`.
    pub fn assemble_mass_blocks(&self, p: &[T]) -> Result<MassBlocks<T>> {
        self.check_path(p)?;
        match &self.shortcuts {
            Some(ops) => Ok(ops.mass()),
            None => Ok(self.mass_from_fields(&self.fields(p)?)),
        }
    }

    /// Projections of `F(t, Σ α_i T_i φ_i)` onto the transformed modes and
    /// their path derivatives.
    pub fn assemble_rhs(&self, state: &RomState<T>) -> Result<RhsBlocks<T>> {
        self.check_state(state)?;
        match &self.shortcuts {
            Some(ops) => Ok(ops.rhs(&self.model, &state.alpha)),
            None => self.rhs_from_fields(&self.fields(state.p.as_slice())?, state),
        }
    }

    fn blocks(&self, state: &RomState<T>) -> Result<(MassBlocks<T>, RhsBlocks<T>)> {
        self.check_state(state)?;
        match &self.shortcuts {
            Some(ops) => Ok((ops.mass(), ops.rhs(&self.model, &state.alpha))),
            None => {
                let fl = self.fields(state.p.as_slice())?;
                Ok((self.mass_from_fields(&fl), self.rhs_from_fields(&fl, state)?))
            }
        }
    }

    /// `D(α)`: `r × q`, entry `(i, path of mode i)` is `α_i`.
    pub fn scaling(&self, alpha: &DVector<T>) -> DMatrix<T> {
        let mut d = DMatrix::zeros(self.rank(), self.q);
        for i in 0..self.rank() {
            if let Some(k) = self.path_of_mode(i) {
                d[(i, k)] = alpha[i];
            }
        }
        d
    }

    fn degenerate_error(&self, p: &DVector<T>, sigma_min: T) -> Error {
        Error::DegenerateMass { p: p.iter().map(|v| v.as_f64()).collect(), sigma_min: sigma_min.as_f64() }
    }

    fn solve_alpha_mass(&self, m_alpha: &DMatrix<T>, p: &DVector<T>) -> Result<nalgebra::Cholesky<T, nalgebra::Dyn>> {
        m_alpha.clone().cholesky().ok_or_else(|| {
            let sv = m_alpha.clone().singular_values();
            self.degenerate_error(p, sv.min())
        })
    }

    /// Solves the coupled system for `(α̇, ṗ)` under the configured phase
    /// condition.
    pub fn rom_velocity(&self, state: &RomState<T>) -> Result<Velocity<T>> {
        let (mass, rhs) = self.blocks(state)?;
        self.velocity_from_blocks(state, &mass, &rhs)
    }

    fn velocity_from_blocks(&self, state: &RomState<T>, mass: &MassBlocks<T>, rhs: &RhsBlocks<T>) -> Result<Velocity<T>> {
        let r = self.rank();
        let q = self.q;
        if q == 0 {
            let ch = self.solve_alpha_mass(&mass.m_alpha, &state.p)?;
            return Ok(Velocity { alpha_dot: ch.solve(&rhs.f_alpha), p_dot: DVector::zeros(0), degenerate: false });
        }
        let d = self.scaling(&state.alpha);
        let nd = &mass.n * &d;
        let dt = d.transpose();
        let mut a = DMatrix::zeros(r + q, r + q);
        let mut b = DVector::zeros(r + q);
        a.view_mut((0, 0), (r, r)).copy_from(&mass.m_alpha);
        a.view_mut((0, r), (r, q)).copy_from(&nd);
        b.rows_mut(0, r).copy_from(&rhs.f_alpha);
        match self.phase {
            PhaseCondition::Residual => {
                a.view_mut((r, 0), (q, r)).copy_from(&nd.transpose());
                a.view_mut((r, r), (q, q)).copy_from(&(&dt * &mass.m_p * &d));
                b.rows_mut(r, q).copy_from(&(&dt * &rhs.f_p));
            }
            PhaseCondition::Freeze => {
                a.view_mut((r, r), (q, q)).copy_from(&(&dt * &mass.m_p * &d));
                b.rows_mut(r, q).copy_from(&(&dt * &rhs.f_p));
            }
            PhaseCondition::FreezeReduced => {
                let ch = self.solve_alpha_mass(&mass.m_alpha, &state.p)?;
                let minv_nd = ch.solve(&nd);
                a.view_mut((r, r), (q, q)).copy_from(&(nd.transpose() * &minv_nd));
                b.rows_mut(r, q).copy_from(&(minv_nd.transpose() * &rhs.f_alpha));
            }
        }
        let sv = a.clone().singular_values();
        let (smax, smin) = (sv.max(), sv.min());
        let mut degenerate = false;
        if !(smin > T::lit(DEGENERACY_THRESHOLD) * smax) {
            let lambda = match self.regularization {
                Regularization::Off => return Err(self.degenerate_error(&state.p, smin)),
                Regularization::Fixed(l) => T::lit(l),
                Regularization::Auto => {
                    let tr = (0..q).fold(T::zero(), |s, k| s + a[(r + k, r + k)]);
                    T::lit(1e-10) * tr / T::from_usize_lossy(q)
                }
            };
            if !(lambda > T::zero()) {
                return Err(self.degenerate_error(&state.p, smin));
            }
            for k in 0..q {
                a[(r + k, r + k)] += lambda;
            }
            degenerate = true;
        }
        let x = a.lu().solve(&b).ok_or_else(|| self.degenerate_error(&state.p, smin))?;
        Ok(Velocity { alpha_dot: x.rows(0, r).into_owned(), p_dot: x.rows(r, q).into_owned(), degenerate })
    }

    /// Full-space residual `Σ α̇_i T_i φ_i + Σ α_i T_i' φ_i ṗ − F`.
    pub fn residual(&self, state: &RomState<T>, alpha_dot: &DVector<T>, p_dot: &DVector<T>) -> Result<Vec<T>> {
        self.check_state(state)?;
        if alpha_dot.len() != self.rank() || p_dot.len() != self.q {
            return Err(Error::Dimension("velocity lengths do not match the system".into()));
        }
        let fl = self.fields(state.p.as_slice())?;
        let z = self.field_sum(&fl, &state.alpha);
        let mut res = self.full_rhs(state.t, &z)?;
        res.iter_mut().for_each(|v| *v = -*v);
        for i in 0..self.rank() {
            for (rk, v) in res.iter_mut().zip(&fl.psi[i]) {
                *rk += alpha_dot[i] * *v;
            }
            if let (Some(d), Some(k)) = (&fl.dpsi[i], self.path_of_mode(i)) {
                let s = state.alpha[i] * p_dot[k];
                for (rk, v) in res.iter_mut().zip(d) {
                    *rk += s * *v;
                }
            }
        }
        Ok(res)
    }

    pub fn residual_norm(&self, state: &RomState<T>, alpha_dot: &DVector<T>, p_dot: &DVector<T>) -> Result<T> {
        let res = self.residual(state, alpha_dot, p_dot)?;
        Ok(self.model.grid().norm(&res))
    }

    /// Phase-condition defects at the supplied velocities (single frame only).
    pub fn phase_condition_values(&self, state: &RomState<T>, alpha_dot: &DVector<T>, p_dot: &DVector<T>) -> Result<PhaseDefects<T>> {
        if self.frames.len() != 1 {
            return Err(Error::Unsupported("phase-condition comparison needs a single-frame system".into()));
        }
        let (mass, rhs) = self.blocks(state)?;
        let d = self.scaling(&state.alpha);
        let dt = d.transpose();
        let psi_freeze = &dt * (&mass.m_p * &d * p_dot - &rhs.f_p);
        let psi_freeze_reduced = -(&dt * mass.n.transpose() * alpha_dot);
        let psi_res = &psi_freeze - &psi_freeze_reduced;
        Ok(PhaseDefects { psi_res, psi_freeze, psi_freeze_reduced })
    }

    /// Coefficients at fixed `p0` by projection, with the initial-value
    /// misfit `J_IV`.
    pub fn project_initial_condition(&self, z0: &GridFunction<T>, p0: &[T]) -> Result<InitialProjection<T>> {
        self.check_path(p0)?;
        if z0.values().len() != self.model.dim() || !z0.grid().same_as(self.model.grid()) {
            return Err(Error::Dimension("initial condition does not match the model".into()));
        }
        let z = z0.values().as_slice();
        let fl = self.fields(p0)?;
        let mass = self.mass_from_fields(&fl);
        let b = DVector::from_fn(self.rank(), |i, _| self.dot(&fl.psi[i], z));
        let alpha = mass.m_alpha.cholesky().map(|ch| ch.solve(&b)).ok_or_else(|| {
            Error::InvalidArgument(format!("reduced mass matrix is singular at p0 = {p0:?}; choose a different initial path value"))
        })?;
        let rec = self.field_sum(&fl, &alpha);
        let diff: Vec<T> = z.iter().zip(&rec).map(|(a, b)| *a - *b).collect();
        let j_iv = self.model.grid().norm(&diff);
        Ok(InitialProjection { state: RomState::new(T::zero(), alpha, DVector::from_column_slice(p0)), j_iv })
    }

    /// Projection with `p0` refined by damped Gauss–Newton on `J_IV`.
    pub fn project_initial_condition_refined(&self, z0: &GridFunction<T>, p0: &[T], iterations: usize) -> Result<InitialProjection<T>> {
        let mut best = self.project_initial_condition(z0, p0)?;
        let misfit = |p: &[T]| -> Result<(Vec<T>, InitialProjection<T>)> {
            let proj = self.project_initial_condition(z0, p)?;
            let fl = self.fields(p)?;
            let rec = self.field_sum(&fl, &proj.state.alpha);
            let w = self.model.grid().weights();
            let n = w.len();
            let res = z0.values().iter().zip(&rec).enumerate().map(|(k, (a, b))| (*a - *b) * w[k % n].sqrt()).collect();
            Ok((res, proj))
        };
        for _ in 0..iterations {
            let p = best.state.p.as_slice().to_vec();
            let (r0, _) = misfit(&p)?;
            let mut jac = DMatrix::zeros(r0.len(), self.q);
            for k in 0..self.q {
                let mut pk = p.clone();
                let h = T::lit(1e-7) * (T::one() + p[k].abs());
                pk[k] += h;
                let (rk, _) = misfit(&pk)?;
                for (row, (a, b)) in rk.iter().zip(&r0).enumerate() {
                    jac[(row, k)] = (*a - *b) / h;
                }
            }
            let rv = DVector::from_vec(r0);
            let Some(step) = (jac.transpose() * &jac).lu().solve(&(-(jac.transpose() * rv))) else { break };
            let mut damping = T::one();
            let mut improved = false;
            for _ in 0..20 {
                let trial: Vec<T> = p.iter().zip(step.iter()).map(|(a, s)| *a + damping * *s).collect();
                if let Ok(cand) = self.project_initial_condition(z0, &trial) {
                    if cand.j_iv < best.j_iv {
                        best = cand;
                        improved = true;
                        break;
                    }
                }
                damping *= T::lit(0.5);
            }
            if !improved || step.norm() * damping < T::lit(1e-12) {
                break;
            }
        }
        Ok(best)
    }

    /// True when the velocity is a fixed linear map of `α`.
    pub(crate) fn is_static_linear(&self) -> bool {
        self.q == 0 && self.model.is_linear()
    }

    /// Velocity of the coefficients along a prescribed path: the `α` rows
    /// `M_α α̇ + N D(α) ṗ = F_α`.
    pub(crate) fn alpha_velocity_along(&self, state: &RomState<T>, p_dot: &DVector<T>) -> Result<DVector<T>> {
        let (mass, rhs) = self.blocks(state)?;
        let d = self.scaling(&state.alpha);
        let ch = self.solve_alpha_mass(&mass.m_alpha, &state.p)?;
        Ok(ch.solve(&(&rhs.f_alpha - &mass.n * d * p_dot)))
    }

    /// Reconstructs `Σ α_i T_i(p) φ_i` on the model grid.
    pub fn reconstruct_state(&self, state: &RomState<T>) -> Result<Vec<T>> {
        self.check_state(state)?;
        let fl = self.fields(state.p.as_slice())?;
        Ok(self.field_sum(&fl, &state.alpha))
    }
}
