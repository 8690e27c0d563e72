use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::integrate::{Jacobian, OdeSystem};
use crate::linalg::SparseMatrix;
use crate::numerics::{DiffOp, DiffOrder, Grid, GridFunction, Topology};
use crate::{Error, Real, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Advection,
    AdvectionDiffusionPeriodic,
    AdvectionDiffusionDirichletNeumann,
    LinearWave,
    Burgers,
}

impl ModelKind {
    pub fn tag(self) -> &'static str {
        match self {
            ModelKind::Advection => "advection",
            ModelKind::AdvectionDiffusionPeriodic => "advection_diffusion",
            ModelKind::AdvectionDiffusionDirichletNeumann => "advection_diffusion_dirichlet_neumann",
            ModelKind::LinearWave => "linear_wave",
            ModelKind::Burgers => "burgers",
        }
    }
}

/// Building blocks of the right-hand sides. Each model is a sum of
/// `coefficient * term`, which keeps reduced operators separable in the
/// parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Term {
    /// `−D1 z`
    Transport,
    /// `D2 z`
    Diffusion,
    /// `[−D1 v; −D1 ρ]` for the stacked state `[ρ; v]`
    WaveCoupling,
    /// `−z ⊙ D1 z`
    Convective,
}

impl Term {
    pub fn is_linear(self) -> bool {
        self != Term::Convective
    }
}

/// Gaussian inflow `amplitude * exp(−((t − center)/width)²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InflowPulse {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
}

impl InflowPulse {
    pub fn value<T: Real>(&self, t: T) -> T {
        let s = (t - T::lit(self.center)) / T::lit(self.width);
        T::lit(self.amplitude) * (-s * s).exp()
    }

    pub fn derivative<T: Real>(&self, t: T) -> T {
        let s = (t - T::lit(self.center)) / T::lit(self.width);
        self.value(t) * (T::lit(-2.0) * s / T::lit(self.width))
    }
}

/// Semi-discretized full-order model `ż = F(t, z)`.
#[derive(Clone, Debug)]
pub struct FomModel<T: Real> {
    kind: ModelKind,
    c: T,
    mu: T,
    grid: Grid<T>,
    initial_condition: GridFunction<T>,
    inflow: Option<InflowPulse>,
    d1: DiffOp<T>,
    transport: SparseMatrix<T>,
    diffusion: SparseMatrix<T>,
}

impl<T: Real> FomModel<T> {
    /// Periodic models use the sixth-order stencils; the Dirichlet–Neumann
    /// model uses second-order central differences with a ghost node at the
    /// outflow and the inflow value imposed at node 0.
    pub fn new(
        kind: ModelKind,
        c: T,
        mu: T,
        grid: Grid<T>,
        initial_condition: GridFunction<T>,
        inflow: Option<InflowPulse>,
    ) -> Result<Self> {
        if mu < T::zero() {
            return Err(Error::InvalidArgument(format!("mu must be non-negative, got {mu}")));
        }
        let components = if kind == ModelKind::LinearWave { 2 } else { 1 };
        if initial_condition.components() != components || !initial_condition.grid().same_as(&grid) {
            return Err(Error::Dimension(format!(
                "{} needs a {components}-component initial condition on the model grid",
                kind.tag()
            )));
        }
        let dirichlet = kind == ModelKind::AdvectionDiffusionDirichletNeumann;
        if dirichlet != (grid.topology() == Topology::Bounded) {
            return Err(Error::InvalidArgument(format!("{} has the wrong grid topology", kind.tag())));
        }
        if dirichlet && inflow.is_none() {
            return Err(Error::InvalidArgument("the Dirichlet–Neumann model needs inflow data".into()));
        }
        let (d1, transport, diffusion) = if dirichlet {
            let d1 = DiffOp::new(DiffOrder::D1Second, grid)?;
            let (tr, di) = dirichlet_neumann_operators(&grid);
            (d1, tr, di)
        } else {
            let d1 = DiffOp::new(DiffOrder::D1Sixth, grid)?;
            let d2 = DiffOp::new(DiffOrder::D2Sixth, grid)?;
            (d1.clone(), d1.matrix().scaled(-T::one()), d2.matrix())
        };
        Ok(Self { kind, c, mu, grid, initial_condition, inflow: if dirichlet { inflow } else { None }, d1, transport, diffusion })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn c(&self) -> T {
        self.c
    }

    pub fn mu(&self) -> T {
        self.mu
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.initial_condition.components()
    }

    pub fn dim(&self) -> usize {
        self.components() * self.grid.n()
    }

    pub fn initial_condition(&self) -> &GridFunction<T> {
        &self.initial_condition
    }

    pub fn inflow(&self) -> Option<&InflowPulse> {
        self.inflow.as_ref()
    }

    /// First-derivative operator used for transform derivatives.
    pub fn d1(&self) -> &DiffOp<T> {
        &self.d1
    }

    /// Same model with other transport speed and viscosity.
    pub fn with_params(&self, c: T, mu: T) -> Result<Self> {
        let mut m = self.clone();
        if mu < T::zero() {
            return Err(Error::InvalidArgument(format!("mu must be non-negative, got {mu}")));
        }
        m.c = c;
        m.mu = mu;
        Ok(m)
    }

    /// Right-hand side as `(coefficient, term)` pairs.
    pub fn terms(&self) -> Vec<(T, Term)> {
        match self.kind {
            ModelKind::Advection => vec![(self.c, Term::Transport)],
            ModelKind::AdvectionDiffusionPeriodic | ModelKind::AdvectionDiffusionDirichletNeumann => {
                vec![(self.c, Term::Transport), (self.mu, Term::Diffusion)]
            }
            ModelKind::LinearWave => vec![(T::one(), Term::WaveCoupling)],
            ModelKind::Burgers => vec![(self.mu, Term::Diffusion), (T::one(), Term::Convective)],
        }
    }

    pub fn is_linear(&self) -> bool {
        self.terms().iter().all(|(_, t)| t.is_linear())
    }

    /// Whether `F(T(η)z) = T(η)F(z)` holds for the periodic shift.
    pub fn is_shift_equivariant(&self) -> bool {
        self.grid.is_periodic()
    }

    /// Matrix of a linear term on the stacked state.
    pub fn term_matrix(&self, term: Term) -> Option<SparseMatrix<T>> {
        let n = self.grid.n();
        let c = self.components();
        let blockdiag = |m: &SparseMatrix<T>| {
            let mut rows = vec![Vec::new(); c * n];
            for comp in 0..c {
                m.embed_into(&mut rows, comp * n, comp * n);
            }
            SparseMatrix::from_rows(c * n, rows)
        };
        match term {
            Term::Transport => Some(blockdiag(&self.transport)),
            Term::Diffusion => Some(blockdiag(&self.diffusion)),
            Term::WaveCoupling => {
                let mut rows = vec![Vec::new(); 2 * n];
                self.transport.embed_into(&mut rows, 0, n);
                self.transport.embed_into(&mut rows, n, 0);
                Some(SparseMatrix::from_rows(2 * n, rows))
            }
            Term::Convective => None,
        }
    }

    /// Adds `coef * term(z)` to `out`.
    pub fn apply_term(&self, coef: T, term: Term, z: &[T], out: &mut [T]) {
        let n = self.grid.n();
        match term {
            Term::Transport => {
                for (zc, oc) in z.chunks(n).zip(out.chunks_mut(n)) {
                    self.transport.mul_vec_acc(coef, zc, oc);
                }
            }
            Term::Diffusion => {
                for (zc, oc) in z.chunks(n).zip(out.chunks_mut(n)) {
                    self.diffusion.mul_vec_acc(coef, zc, oc);
                }
            }
            Term::WaveCoupling => {
                let (rho, v) = z.split_at(n);
                let (orho, ov) = out.split_at_mut(n);
                self.transport.mul_vec_acc(coef, v, orho);
                self.transport.mul_vec_acc(coef, rho, ov);
            }
            Term::Convective => {
                let mut dz = vec![T::zero(); n];
                for (zc, oc) in z.chunks(n).zip(out.chunks_mut(n)) {
                    self.d1.apply_scalar(zc, &mut dz);
                    for k in 0..n {
                        oc[k] -= coef * zc[k] * dz[k];
                    }
                }
            }
        }
    }

    /// Evaluates `F(t, z)` into `out`.
    pub fn eval_rhs_into(&self, t: T, z: &[T], out: &mut [T]) -> Result<()> {
        if z.len() != self.dim() || out.len() != self.dim() {
            return Err(Error::Dimension(format!("state length {} vs model dimension {}", z.len(), self.dim())));
        }
        out.iter_mut().for_each(|v| *v = T::zero());
        match self.inflow {
            Some(inflow) => {
                let mut zb = z.to_vec();
                zb[0] = inflow.value(t);
                for (coef, term) in self.terms() {
                    self.apply_term(coef, term, &zb, out);
                }
                out[0] = inflow.derivative(t);
            }
            None => {
                for (coef, term) in self.terms() {
                    self.apply_term(coef, term, z, out);
                }
            }
        }
        Ok(())
    }

    pub fn eval_rhs(&self, t: T, z: &GridFunction<T>) -> Result<GridFunction<T>> {
        if z.components() != self.components() {
            return Err(Error::Dimension("component count does not match the model".into()));
        }
        let mut out = vec![T::zero(); self.dim()];
        self.eval_rhs_into(t, z.values().as_slice(), &mut out)?;
        GridFunction::new(self.grid, self.components(), out.into())
    }

    /// Jacobian of `F` with respect to `z`.
    pub fn jacobian_at(&self, z: &[T]) -> SparseMatrix<T> {
        let dim = self.dim();
        let mut acc = SparseMatrix::zeros(dim, dim);
        for (coef, term) in self.terms() {
            let part = match self.term_matrix(term) {
                Some(m) => m,
                None => self.convective_jacobian(z),
            };
            acc = acc.combine(T::one(), &part, coef);
        }
        if self.inflow.is_some() {
            for row in acc.rows_mut().iter_mut() {
                row.retain(|&(c, _)| c != 0);
            }
        }
        acc
    }

    fn convective_jacobian(&self, z: &[T]) -> SparseMatrix<T> {
        let n = self.grid.n();
        let dz = self.d1.apply(z);
        let rows = (0..n)
            .map(|k| {
                let mut r: Vec<(usize, T)> = self.d1.row(k).into_iter().map(|(c, w)| (c, -z[k] * w)).collect();
                r.push((k, -dz[k]));
                r
            })
            .collect();
        SparseMatrix::from_rows(n, rows)
    }

    /// Enforces the Dirichlet value after a step.
    pub fn enforce_boundary(&self, t: T, z: &mut [T]) {
        if let Some(inflow) = self.inflow {
            z[0] = inflow.value(t);
        }
    }
}

fn dirichlet_neumann_operators<T: Real>(grid: &Grid<T>) -> (SparseMatrix<T>, SparseMatrix<T>) {
    let n = grid.n();
    let h = grid.dxi();
    let half_inv_h = T::one() / (T::lit(2.0) * h);
    let inv_h2 = T::one() / (h * h);
    let mut tr = vec![Vec::new(); n];
    let mut di = vec![Vec::new(); n];
    for k in 1..n - 1 {
        tr[k] = vec![(k - 1, half_inv_h), (k + 1, -half_inv_h)];
        di[k] = vec![(k - 1, inv_h2), (k, T::lit(-2.0) * inv_h2), (k + 1, inv_h2)];
    }
    // Ghost node z_n = z_{n−2}: zero slope, doubled neighbour coupling.
    di[n - 1] = vec![(n - 2, T::lit(2.0) * inv_h2), (n - 1, T::lit(-2.0) * inv_h2)];
    (SparseMatrix::from_rows(n, tr), SparseMatrix::from_rows(n, di))
}

impl<T: Real> OdeSystem<T> for FomModel<T> {
    fn dim(&self) -> usize {
        FomModel::dim(self)
    }

    fn rhs(&self, t: T, y: &[T], out: &mut [T]) -> Result<()> {
        self.eval_rhs_into(t, y, out)
    }

    fn jacobian(&self, _t: T, y: &[T]) -> Result<Jacobian<T>> {
        Ok(Jacobian::Sparse(self.jacobian_at(y)))
    }

    fn constant_jacobian(&self) -> bool {
        self.is_linear()
    }

    fn post_step(&self, t: T, y: &mut [T]) {
        self.enforce_boundary(t, y);
    }
}

/// Dense Jacobian by forward differences (used by tests as an oracle).
pub fn finite_difference_jacobian<T: Real>(
    f: impl Fn(&[T], &mut [T]) -> Result<()>,
    y: &[T],
) -> Result<DMatrix<T>> {
    let n = y.len();
    let mut f0 = vec![T::zero(); n];
    f(y, &mut f0)?;
    let mut jac = DMatrix::zeros(n, n);
    let mut yp = y.to_vec();
    let mut fp = vec![T::zero(); n];
    for j in 0..n {
        let h = T::lit(1e-7) * (T::one() + y[j].abs());
        yp[j] = y[j] + h;
        f(&yp, &mut fp)?;
        for i in 0..n {
            jac[(i, j)] = (fp[i] - f0[i]) / h;
        }
        yp[j] = y[j];
    }
    Ok(jac)
}
