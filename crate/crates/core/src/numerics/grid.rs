use serde::{Deserialize, Serialize};

use crate::{Error, Real, Result};

/// Smallest node count supported by the seven-point stencils.
pub const MIN_NODES: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// Nodes `xi0 + k*dxi`, `k < n`, with the right endpoint identified with the left one.
    Periodic,
    /// Both endpoints are nodes.
    Bounded,
}

/// Equidistant 1-D grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid<T> {
    n: usize,
    xi0: T,
    length: T,
    topology: Topology,
    dxi: T,
}

impl<T: Real> Grid<T> {
    pub fn new(n: usize, xi0: T, length: T, topology: Topology) -> Result<Self> {
        if n < MIN_NODES {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least {MIN_NODES} nodes, got {n}"
            )));
        }
        if !(length > T::zero()) {
            return Err(Error::InvalidArgument(format!("grid length must be positive, got {length}")));
        }
        let cells = match topology {
            Topology::Periodic => n,
            Topology::Bounded => n - 1,
        };
        let dxi = length / T::from_usize_lossy(cells);
        Ok(Self { n, xi0, length, topology, dxi })
    }

    pub fn periodic(n: usize, xi0: T, length: T) -> Result<Self> {
        Self::new(n, xi0, length, Topology::Periodic)
    }

    pub fn bounded(n: usize, xi0: T, length: T) -> Result<Self> {
        Self::new(n, xi0, length, Topology::Bounded)
    }

    /// Bounded grid with a prescribed spacing; `length` must be a multiple of `dxi`.
    pub fn bounded_with_spacing(xi0: T, length: T, dxi: T) -> Result<Self> {
        let cells = (length / dxi).round();
        let n = cells.as_f64() as usize + 1;
        Self::bounded(n, xi0, length)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn xi0(&self) -> T {
        self.xi0
    }

    pub fn length(&self) -> T {
        self.length
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn is_periodic(&self) -> bool {
        self.topology == Topology::Periodic
    }

    pub fn dxi(&self) -> T {
        self.dxi
    }

    pub fn node(&self, k: usize) -> T {
        self.xi0 + T::from_usize_lossy(k) * self.dxi
    }

    pub fn nodes(&self) -> Vec<T> {
        (0..self.n).map(|k| self.node(k)).collect()
    }

    /// Quadrature weight of node `k` in the discrete inner product.
    #[inline]
    pub fn weight(&self, k: usize) -> T {
        match self.topology {
            Topology::Bounded if k == 0 || k + 1 == self.n => self.dxi * T::lit(0.5),
            _ => self.dxi,
        }
    }

    pub fn weights(&self) -> Vec<T> {
        (0..self.n).map(|k| self.weight(k)).collect()
    }

    /// Weighted product of two stacked vectors with `u.len() / n` components each.
    pub fn dot(&self, u: &[T], v: &[T]) -> T {
        debug_assert_eq!(u.len(), v.len());
        debug_assert_eq!(u.len() % self.n, 0);
        match self.topology {
            Topology::Periodic => {
                let mut s = T::zero();
                for (a, b) in u.iter().zip(v) {
                    s += *a * *b;
                }
                s * self.dxi
            }
            Topology::Bounded => {
                let mut s = T::zero();
                for (cu, cv) in u.chunks(self.n).zip(v.chunks(self.n)) {
                    let mut inner = T::zero();
                    for k in 1..self.n - 1 {
                        inner += cu[k] * cv[k];
                    }
                    let ends = cu[0] * cv[0] + cu[self.n - 1] * cv[self.n - 1];
                    s += inner + ends * T::lit(0.5);
                }
                s * self.dxi
            }
        }
    }

    pub fn norm(&self, u: &[T]) -> T {
        self.dot(u, u).sqrt()
    }

    pub fn same_as(&self, other: &Grid<T>) -> bool {
        self.n == other.n && self.topology == other.topology && self.dxi == other.dxi && self.xi0 == other.xi0
    }
}
