use serde::{Deserialize, Serialize};

use super::{DiffOp, Grid, GridFunction, Topology};
use crate::{Error, Real, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    PeriodicShift,
    VirtualDomainShift,
    Identity,
}

/// Shifts `φ ↦ φ(· − η)` realized by cubic Lagrange interpolation.
///
/// Modes live on the storage grid: the physical grid itself, or for
/// [`TransformKind::VirtualDomainShift`] an extended bounded grid with the
/// same spacing whose shifted samples are restricted to the physical nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformFamily<T> {
    kind: TransformKind,
    grid: Grid<T>,
    virtual_grid: Option<Grid<T>>,
    offset: usize,
}

/// Interpolation stencil for one shift value, shared by all nodes.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Stencil<T> {
    /// Storage index of node `k`'s left-centre node is `k + base`.
    pub base: isize,
    /// `None` when the shift is a whole number of cells.
    pub weights: Option<[T; 4]>,
}

fn lagrange_weights<T: Real>(fr: T) -> [T; 4] {
    let nodes = [-1.0, 0.0, 1.0, 2.0];
    let mut w = [T::zero(); 4];
    for (a, wa) in w.iter_mut().enumerate() {
        let mut v = T::one();
        for (b, &nb) in nodes.iter().enumerate() {
            if a != b {
                v *= (fr - T::lit(nb)) / T::lit(nodes[a] - nb);
            }
        }
        *wa = v;
    }
    w
}

impl<T: Real> TransformFamily<T> {
    pub fn identity(grid: Grid<T>) -> Self {
        Self { kind: TransformKind::Identity, grid, virtual_grid: None, offset: 0 }
    }

    pub fn periodic_shift(grid: Grid<T>) -> Result<Self> {
        if grid.topology() != Topology::Periodic {
            return Err(Error::InvalidArgument("periodic shift needs a periodic grid".into()));
        }
        Ok(Self { kind: TransformKind::PeriodicShift, grid, virtual_grid: None, offset: 0 })
    }

    /// Virtual-domain shift covering every path value in `[p_min, p_max]`,
    /// padded by two cells on each side for the interpolation stencil.
    pub fn virtual_shift(grid: Grid<T>, p_min: T, p_max: T) -> Result<Self> {
        if grid.topology() != Topology::Bounded {
            return Err(Error::InvalidArgument("virtual-domain shift needs a bounded grid".into()));
        }
        if !(p_min.is_finite() && p_max.is_finite()) || p_min > p_max {
            return Err(Error::InvalidArgument(format!("invalid path range [{p_min}, {p_max}]")));
        }
        let dx = grid.dxi();
        let cells = |v: T| -> usize {
            let c = (v.max(T::zero()) / dx - T::lit(1e-9)).ceil();
            c.max(T::zero()).as_f64() as usize
        };
        Self::virtual_with_padding(grid, cells(p_max) + 2, cells(-p_min) + 2)
    }

    /// Virtual-domain shift whose storage grid extends the physical grid by
    /// `left` and `right` nodes.
    pub fn virtual_with_padding(grid: Grid<T>, left: usize, right: usize) -> Result<Self> {
        if grid.topology() != Topology::Bounded {
            return Err(Error::InvalidArgument("virtual-domain shift needs a bounded grid".into()));
        }
        let dx = grid.dxi();
        let nv = grid.n() + left + right;
        let xv0 = grid.xi0() - T::from_usize_lossy(left) * dx;
        let vgrid = Grid::bounded(nv, xv0, T::from_usize_lossy(nv - 1) * dx)?;
        Ok(Self { kind: TransformKind::VirtualDomainShift, grid, virtual_grid: Some(vgrid), offset: left })
    }

    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    /// Physical grid the transformed functions live on.
    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn virtual_grid(&self) -> Option<&Grid<T>> {
        self.virtual_grid.as_ref()
    }

    /// Grid on which untransformed modes are stored.
    pub fn storage_grid(&self) -> &Grid<T> {
        self.virtual_grid.as_ref().unwrap_or(&self.grid)
    }

    /// Storage index of physical node 0.
    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn param_dim(&self) -> usize {
        1
    }

    pub fn is_isometric(&self) -> bool {
        self.kind != TransformKind::VirtualDomainShift
    }

    pub(crate) fn stencil(&self, eta: T) -> Result<Stencil<T>> {
        let s = -eta / self.grid.dxi();
        let nearest = s.round();
        let (fl, weights) = if (s - nearest).abs() <= T::lit(1e-10) {
            (nearest, None)
        } else {
            let fl = s.floor();
            (fl, Some(lagrange_weights(s - fl)))
        };
        let fl = fl.as_f64() as isize;
        let base = fl + self.offset as isize;
        if self.kind == TransformKind::VirtualDomainShift {
            let nv = self.storage_grid().n() as isize;
            let last = self.grid.n() as isize - 1;
            let (lo, hi) = if weights.is_some() { (base - 1, last + base + 2) } else { (base, last + base) };
            if lo < 0 || hi > nv - 1 {
                return Err(Error::DomainExceeded { shift: eta.as_f64() });
            }
        }
        Ok(Stencil { base, weights })
    }

    fn check_len(&self, len: usize, n: usize) -> Result<usize> {
        if len == 0 || len % n != 0 {
            return Err(Error::Dimension(format!("length {len} is not a multiple of {n}")));
        }
        Ok(len / n)
    }

    /// Samples the stored function `phi` at `ξ_k − η` on the physical grid.
    pub fn apply(&self, eta: T, phi: &[T]) -> Result<Vec<T>> {
        let ns = self.storage_grid().n();
        let c = self.check_len(phi.len(), ns)?;
        let mut out = vec![T::zero(); c * self.grid.n()];
        self.apply_into(eta, phi, &mut out)?;
        Ok(out)
    }

    pub fn apply_into(&self, eta: T, phi: &[T], out: &mut [T]) -> Result<()> {
        let n = self.grid.n();
        let ns = self.storage_grid().n();
        let c = self.check_len(phi.len(), ns)?;
        if out.len() != c * n {
            return Err(Error::Dimension("output length mismatch".into()));
        }
        if self.kind == TransformKind::Identity || (eta == T::zero() && self.offset == 0) {
            out.copy_from_slice(phi);
            return Ok(());
        }
        let st = self.stencil(eta)?;
        let periodic = self.kind == TransformKind::PeriodicShift;
        let wrap = |i: isize| -> usize {
            if periodic {
                i.rem_euclid(ns as isize) as usize
            } else {
                i as usize
            }
        };
        for (src, dst) in phi.chunks(ns).zip(out.chunks_mut(n)) {
            match st.weights {
                None => {
                    for (k, d) in dst.iter_mut().enumerate() {
                        *d = src[wrap(k as isize + st.base)];
                    }
                }
                Some(w) => {
                    for (k, d) in dst.iter_mut().enumerate() {
                        let b = k as isize + st.base;
                        *d = w[0] * src[wrap(b - 1)] + w[1] * src[wrap(b)] + w[2] * src[wrap(b + 1)] + w[3] * src[wrap(b + 2)];
                    }
                }
            }
        }
        Ok(())
    }

    /// `[T'(η)φ]`, realized as `−D1(T(η)φ)`.
    pub fn derivative(&self, eta: T, phi: &[T], d1: &DiffOp<T>) -> Result<Vec<T>> {
        let t = self.apply(eta, phi)?;
        let mut d = d1.apply(&t);
        for v in &mut d {
            *v = -*v;
        }
        Ok(d)
    }

    /// Adjoint-type back-transform of a physical field into storage.
    ///
    /// The isometric shift uses `T(−η)`; the virtual-domain shift uses the
    /// transpose of its interpolation (zero extension).
    pub fn back_transform(&self, eta: T, z: &[T]) -> Result<Vec<T>> {
        match self.kind {
            TransformKind::Identity => Ok(z.to_vec()),
            TransformKind::PeriodicShift => self.apply(-eta, z),
            TransformKind::VirtualDomainShift => {
                let n = self.grid.n();
                let ns = self.storage_grid().n();
                let c = self.check_len(z.len(), n)?;
                let st = self.stencil(eta)?;
                let mut out = vec![T::zero(); c * ns];
                for (src, dst) in z.chunks(n).zip(out.chunks_mut(ns)) {
                    for (k, &v) in src.iter().enumerate() {
                        let b = (k as isize + st.base) as usize;
                        match st.weights {
                            None => dst[b] += v,
                            Some(w) => {
                                dst[b - 1] += w[0] * v;
                                dst[b] += w[1] * v;
                                dst[b + 1] += w[2] * v;
                                dst[b + 2] += w[3] * v;
                            }
                        }
                    }
                }
                Ok(out)
            }
        }
    }

    /// Grid-function form of [`apply`](Self::apply) with a parameter vector of length 1.
    pub fn transform(&self, eta: &[T], phi: &GridFunction<T>) -> Result<GridFunction<T>> {
        let eta = self.scalar_param(eta)?;
        if !phi.grid().same_as(self.storage_grid()) {
            return Err(Error::Dimension("mode is not on the storage grid".into()));
        }
        let v = self.apply(eta, phi.values().as_slice())?;
        GridFunction::new(self.grid, phi.components(), v.into())
    }

    pub fn transform_derivative(&self, eta: &[T], phi: &GridFunction<T>, d1: &DiffOp<T>) -> Result<GridFunction<T>> {
        let eta = self.scalar_param(eta)?;
        if !phi.grid().same_as(self.storage_grid()) {
            return Err(Error::Dimension("mode is not on the storage grid".into()));
        }
        let v = self.derivative(eta, phi.values().as_slice(), d1)?;
        GridFunction::new(self.grid, phi.components(), v.into())
    }

    fn scalar_param(&self, eta: &[T]) -> Result<T> {
        match eta {
            [e] => Ok(*e),
            _ => Err(Error::Dimension(format!("shift parameter has dimension 1, got {}", eta.len()))),
        }
    }
}
