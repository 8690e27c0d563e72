use crate::fom::SnapshotSet;
use crate::{Error, Real, Result};

/// Path identified from snapshot data.
#[derive(Clone, Debug, PartialEq)]
pub struct PathEstimate<T> {
    pub path: Vec<T>,
    /// Sample indices whose correlation with the previous sample was flat,
    /// so no increment could be identified.
    pub flat_steps: Vec<usize>,
}

/// Incremental shift tracking: each increment maximizes the circular
/// cross-correlation of consecutive snapshots over lattice shifts, refined by
/// a parabola through the peak and its neighbours.
pub fn estimate_path<T: Real>(snapshots: &SnapshotSet<T>) -> Result<PathEstimate<T>> {
    let grid = snapshots.grid();
    if snapshots.components() != 1 || !grid.is_periodic() {
        return Err(Error::InvalidArgument("path estimation needs scalar snapshots on a periodic grid".into()));
    }
    let n = grid.n();
    let dx = grid.dxi();
    let mut path = vec![T::zero(); snapshots.len()];
    let mut flat_steps = Vec::new();
    let mut corr = vec![T::zero(); n];
    for k in 1..snapshots.len() {
        let prev = snapshots.column(k - 1);
        let next = snapshots.column(k);
        // corr[l] = Σ_i next[i] prev[i − l]
        for (l, c) in corr.iter_mut().enumerate() {
            let mut s = T::zero();
            for i in 0..n {
                s += next[i] * prev[(i + n - l) % n];
            }
            *c = s;
        }
        let (mut best, mut lo, mut hi) = (0, corr[0], corr[0]);
        for (l, &c) in corr.iter().enumerate() {
            if c > corr[best] {
                best = l;
            }
            lo = lo.min(c);
            hi = hi.max(c);
        }
        if hi - lo <= T::lit(1e-12) * (hi.abs() + lo.abs()) {
            log::warn!("flat cross-correlation at sample {k}; path increment set to zero");
            flat_steps.push(k);
            path[k] = path[k - 1];
            continue;
        }
        let left = corr[(best + n - 1) % n];
        let right = corr[(best + 1) % n];
        let curvature = left - T::lit(2.0) * corr[best] + right;
        let refine = if curvature < T::zero() { T::lit(0.5) * (left - right) / curvature } else { T::zero() };
        let lattice = if best > n / 2 { best as f64 - n as f64 } else { best as f64 };
        path[k] = path[k - 1] + (T::lit(lattice) + refine) * dx;
    }
    Ok(PathEstimate { path, flat_steps })
}
