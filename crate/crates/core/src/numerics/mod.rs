//! Grids, inner products, finite differences and shift transforms.

mod diff;
mod field;
mod grid;
mod transform;

pub use diff::{Boundary, DiffOp, DiffOrder};
pub use field::{inner_product, GridFunction};
pub use grid::{Grid, Topology, MIN_NODES};
pub use transform::{TransformFamily, TransformKind};
