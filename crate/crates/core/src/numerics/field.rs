use nalgebra::DVector;

use super::Grid;
use crate::{Error, Real, Result};

/// Possibly vector-valued function sampled on a grid.
///
/// Values are stored component after component: `values[c * n + k]` is
/// component `c` at node `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction<T: Real> {
    grid: Grid<T>,
    components: usize,
    values: DVector<T>,
}

impl<T: Real> GridFunction<T> {
    pub fn new(grid: Grid<T>, components: usize, values: DVector<T>) -> Result<Self> {
        if components == 0 || values.len() != components * grid.n() {
            return Err(Error::Dimension(format!(
                "expected {} x {} values, got {}",
                components,
                grid.n(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("grid function has non-finite values".into()));
        }
        Ok(Self { grid, components, values })
    }

    pub fn zeros(grid: Grid<T>, components: usize) -> Self {
        Self { grid, components, values: DVector::zeros(components * grid.n()) }
    }

    /// Samples a scalar function at the grid nodes.
    pub fn from_fn(grid: Grid<T>, f: impl Fn(T) -> T) -> Self {
        let values = DVector::from_iterator(grid.n(), grid.nodes().into_iter().map(f));
        Self { grid, components: 1, values }
    }

    /// Stacks scalar functions into one multi-component function.
    pub fn stack(parts: &[GridFunction<T>]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::Dimension("nothing to stack".into()))?;
        let grid = first.grid;
        let mut data = Vec::new();
        let mut components = 0;
        for p in parts {
            if !p.grid.same_as(&grid) {
                return Err(Error::Dimension("stacked functions live on different grids".into()));
            }
            data.extend(p.values.iter().copied());
            components += p.components;
        }
        Self::new(grid, components, DVector::from_vec(data))
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn values(&self) -> &DVector<T> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut DVector<T> {
        &mut self.values
    }

    pub fn into_values(self) -> DVector<T> {
        self.values
    }

    pub fn component(&self, c: usize) -> &[T] {
        let n = self.grid.n();
        &self.values.as_slice()[c * n..(c + 1) * n]
    }

    pub fn norm(&self) -> T {
        self.grid.norm(self.values.as_slice())
    }
}

/// Discrete L2 inner product of two grid functions.
pub fn inner_product<T: Real>(u: &GridFunction<T>, v: &GridFunction<T>) -> Result<T> {
    if !u.grid.same_as(&v.grid) || u.components != v.components {
        return Err(Error::Dimension("inner product of functions on different grids".into()));
    }
    Ok(u.grid.dot(u.values.as_slice(), v.values.as_slice()))
}
