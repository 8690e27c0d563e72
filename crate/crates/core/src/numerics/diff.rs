use serde::{Deserialize, Serialize};

use super::{Grid, GridFunction, Topology};
use crate::linalg::SparseMatrix;
use crate::{Error, Real, Result};

const D1_SIXTH: [f64; 7] = [-1.0 / 60.0, 3.0 / 20.0, -3.0 / 4.0, 0.0, 3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];
const D2_SIXTH: [f64; 7] = [1.0 / 90.0, -3.0 / 20.0, 3.0 / 2.0, -49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0];
const D1_SECOND: [f64; 3] = [-0.5, 0.0, 0.5];
const D2_SECOND: [f64; 3] = [1.0, -2.0, 1.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffOrder {
    D1Sixth,
    D2Sixth,
    D1Second,
    D2Second,
}

impl DiffOrder {
    pub fn derivative(self) -> u32 {
        match self {
            DiffOrder::D1Sixth | DiffOrder::D1Second => 1,
            DiffOrder::D2Sixth | DiffOrder::D2Second => 2,
        }
    }

    fn interior(self) -> &'static [f64] {
        match self {
            DiffOrder::D1Sixth => &D1_SIXTH,
            DiffOrder::D2Sixth => &D2_SIXTH,
            DiffOrder::D1Second => &D1_SECOND,
            DiffOrder::D2Second => &D2_SECOND,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    PeriodicCirculant,
    OneSidedClosure,
}

/// Finite-difference derivative on a grid, applied componentwise.
#[derive(Clone, Debug)]
pub struct DiffOp<T> {
    order: DiffOrder,
    grid: Grid<T>,
    boundary: Boundary,
    interior: Vec<T>,
    scale: T,
}

impl<T: Real> DiffOp<T> {
    /// Picks the closure from the grid topology. Sixth-order stencils have no
    /// one-sided closure and are rejected on bounded grids.
    pub fn new(order: DiffOrder, grid: Grid<T>) -> Result<Self> {
        let boundary = match grid.topology() {
            Topology::Periodic => Boundary::PeriodicCirculant,
            Topology::Bounded => Boundary::OneSidedClosure,
        };
        if boundary == Boundary::OneSidedClosure && matches!(order, DiffOrder::D1Sixth | DiffOrder::D2Sixth) {
            return Err(Error::Unsupported("sixth-order stencils need a periodic grid".into()));
        }
        let h = grid.dxi();
        let scale = if order.derivative() == 1 { T::one() / h } else { T::one() / (h * h) };
        let interior = order.interior().iter().map(|&w| T::lit(w)).collect();
        Ok(Self { order, grid, boundary, interior, scale })
    }

    pub fn order(&self) -> DiffOrder {
        self.order
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    fn closure_row(&self, k: usize) -> Option<Vec<(usize, T)>> {
        let n = self.grid.n();
        if self.boundary != Boundary::OneSidedClosure || (k != 0 && k + 1 != n) {
            return None;
        }
        let w: [f64; 4] = match self.order {
            DiffOrder::D1Second => [-1.5, 2.0, -0.5, 0.0],
            DiffOrder::D2Second => [2.0, -5.0, 4.0, -1.0],
            _ => unreachable!("sixth order has no closure"),
        };
        // Mirrored closure at the right end flips the sign of odd derivatives.
        let sign = if k == 0 || self.order.derivative() == 2 { 1.0 } else { -1.0 };
        Some(
            w.iter()
                .enumerate()
                .filter(|(_, &c)| c != 0.0)
                .map(|(j, &c)| {
                    let col = if k == 0 { j } else { n - 1 - j };
                    (col, T::lit(sign * c) * self.scale)
                })
                .collect(),
        )
    }

    /// Nonzero entries `(column, weight)` of matrix row `k`.
    pub fn row(&self, k: usize) -> Vec<(usize, T)> {
        if let Some(r) = self.closure_row(k) {
            return r;
        }
        let n = self.grid.n() as isize;
        let half = (self.interior.len() / 2) as isize;
        let mut out: Vec<(usize, T)> = Vec::with_capacity(self.interior.len());
        for (j, &w) in self.interior.iter().enumerate() {
            if w == T::zero() {
                continue;
            }
            let col = (k as isize + j as isize - half).rem_euclid(n) as usize;
            out.push((col, w * self.scale));
        }
        out
    }

    /// Applies the operator to one component.
    pub fn apply_scalar(&self, u: &[T], out: &mut [T]) {
        let n = self.grid.n();
        debug_assert_eq!(u.len(), n);
        debug_assert_eq!(out.len(), n);
        let half = self.interior.len() / 2;
        let st = &self.interior;
        for k in half..n - half {
            let mut s = T::zero();
            for (j, &w) in st.iter().enumerate() {
                s += w * u[k + j - half];
            }
            out[k] = s * self.scale;
        }
        for k in (0..half).chain(n - half..n) {
            let mut s = T::zero();
            for (col, w) in self.row(k) {
                s += w * u[col];
            }
            out[k] = s;
        }
    }

    /// Applies the operator to every component of a stacked vector.
    pub fn apply(&self, u: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); u.len()];
        self.apply_into(u, &mut out);
        out
    }

    pub fn apply_into(&self, u: &[T], out: &mut [T]) {
        let n = self.grid.n();
        for (cu, co) in u.chunks(n).zip(out.chunks_mut(n)) {
            self.apply_scalar(cu, co);
        }
    }

    pub fn apply_fn(&self, u: &GridFunction<T>) -> Result<GridFunction<T>> {
        if !u.grid().same_as(&self.grid) {
            return Err(Error::Dimension("function and operator live on different grids".into()));
        }
        let v = self.apply(u.values().as_slice());
        GridFunction::new(self.grid, u.components(), v.into())
    }

    /// Operator as a sparse matrix on one component.
    pub fn matrix(&self) -> SparseMatrix<T> {
        let n = self.grid.n();
        SparseMatrix::from_rows(n, (0..n).map(|k| self.row(k)).collect())
    }
}
