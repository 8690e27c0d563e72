use nalgebra::{DMatrix, DVector};

use super::pod::{fix_signs, space_weights, weighted_pod};
use super::Frame;
use crate::fom::{time_weight, SnapshotSet};
use crate::linalg::thin_svd;
use crate::numerics::TransformFamily;
use crate::{Error, Real, Result};

/// Value of `z` (one component, `n` nodes) at fractional node index `u`,
/// using the cubic Lagrange stencil clamped into the grid.
fn sample<T: Real>(z: &[T], u: T) -> T {
    let n = z.len();
    let nearest = u.round();
    if (u - nearest).abs() <= T::lit(1e-10) {
        return z[nearest.as_f64() as usize];
    }
    let fl = u.floor().as_f64() as isize;
    let base = (fl - 1).clamp(0, n as isize - 4) as usize;
    let x = u - T::from_usize_lossy(base);
    let mut v = T::zero();
    for a in 0..4 {
        let mut w = T::one();
        for b in 0..4 {
            if a != b {
                w *= (x - T::from_usize_lossy(b)) / (T::from_usize_lossy(a) - T::from_usize_lossy(b));
            }
        }
        v += w * z[base + a];
    }
    v
}

/// Storage-frame data matrix and its observation mask.
pub(crate) fn storage_data<T: Real>(
    snapshots: &SnapshotSet<T>,
    path: &[T],
    fam: &TransformFamily<T>,
) -> (DMatrix<T>, Vec<Vec<bool>>) {
    let n = fam.grid().n();
    let ns = fam.storage_grid().n();
    let c = snapshots.components();
    let m = snapshots.len();
    let dx = fam.grid().dxi();
    let off = T::from_usize_lossy(fam.offset());
    let last = T::from_usize_lossy(n - 1);
    let tol = T::lit(1e-10);
    let mut data = DMatrix::zeros(c * ns, m);
    let mut seen = vec![vec![false; m]; c * ns];
    for (j, &p) in path.iter().enumerate() {
        let col = snapshots.column(j);
        for i in 0..ns {
            let u = T::from_usize_lossy(i) - off + p / dx;
            if u < -tol || u > last + tol {
                continue;
            }
            let u = u.max(T::zero()).min(last);
            for comp in 0..c {
                data[(comp * ns + i, j)] = sample(&col[comp * n..(comp + 1) * n], u);
                seen[comp * ns + i][j] = true;
            }
        }
    }
    (data, seen)
}

/// Replaces unobserved entries of each row by the nearest observed value in time.
pub(crate) fn fill_nearest_in_time<T: Real>(data: &mut DMatrix<T>, seen: &[Vec<bool>]) {
    let m = data.ncols();
    for (i, mask) in seen.iter().enumerate() {
        let observed: Vec<usize> = (0..m).filter(|&j| mask[j]).collect();
        if observed.is_empty() {
            continue;
        }
        for j in (0..m).filter(|&j| !mask[j]) {
            let pos = observed.partition_point(|&o| o < j);
            let src = match (pos.checked_sub(1).map(|q| observed[q]), observed.get(pos)) {
                (Some(before), Some(&after)) => {
                    if after - j < j - before {
                        after
                    } else {
                        before
                    }
                }
                (Some(before), None) => before,
                (None, Some(&after)) => after,
                (None, None) => unreachable!("row has observations"),
            };
            data[(i, j)] = data[(i, src)];
        }
    }
}

/// Weighted least-squares coefficients of the restricted shifted modes.
pub(crate) fn fit_coefficients<T: Real>(
    fam: &TransformFamily<T>,
    modes: &DMatrix<T>,
    path: &[T],
    snapshots: &SnapshotSet<T>,
) -> Result<DMatrix<T>> {
    let r = modes.ncols();
    let c = snapshots.components();
    let sqrt_w: Vec<T> = space_weights(fam.grid(), c).into_iter().map(|w| w.sqrt()).collect();
    let rows = sqrt_w.len();
    let mut coefficients = DMatrix::zeros(r, path.len());
    let ms = modes.nrows();
    for (k, &p) in path.iter().enumerate() {
        let mut b = DMatrix::zeros(rows, r);
        for i in 0..r {
            let shifted = fam.apply(p, &modes.as_slice()[i * ms..(i + 1) * ms])?;
            for (row, v) in shifted.into_iter().enumerate() {
                b[(row, i)] = v * sqrt_w[row];
            }
        }
        let rhs = DVector::from_iterator(rows, snapshots.column(k).iter().zip(&sqrt_w).map(|(z, w)| *z * *w));
        let sol = b
            .svd(true, true)
            .solve(&rhs, T::machine_eps() * T::lit(1e3))
            .map_err(|e| Error::InvalidArgument(format!("least-squares fit failed: {e}")))?;
        coefficients.column_mut(k).copy_from(&sol);
    }
    Ok(coefficients)
}

/// Solves the small least-squares normal equations `g x = b`, falling back to
/// the pseudo-inverse when `g` is singular.
fn solve_normal<T: Real>(g: DMatrix<T>, b: DVector<T>) -> Option<DVector<T>> {
    if let Some(ch) = g.clone().cholesky() {
        return Some(ch.solve(&b));
    }
    g.svd(true, true).solve(&b, T::machine_eps() * T::lit(1e3)).ok()
}

/// Alternating least squares on the observed entries: coefficients per
/// sample, then mode values per storage row. Unobserved entries are ignored.
pub(crate) fn refine_on_observed<T: Real>(
    data: &DMatrix<T>,
    seen: &[Vec<bool>],
    modes: &mut DMatrix<T>,
    space_w: &[T],
    time_w: &[T],
    passes: usize,
) {
    let (rows, m) = data.shape();
    let r = modes.ncols();
    let mut coef = DMatrix::<T>::zeros(r, m);
    for _ in 0..passes {
        for j in 0..m {
            let mut g = DMatrix::zeros(r, r);
            let mut b = DVector::zeros(r);
            for i in (0..rows).filter(|&i| seen[i][j]) {
                let phi = modes.row(i).transpose();
                g += &phi * phi.transpose() * space_w[i];
                b += &phi * (data[(i, j)] * space_w[i]);
            }
            if let Some(x) = solve_normal(g, b) {
                coef.column_mut(j).copy_from(&x);
            }
        }
        for i in 0..rows {
            let mut g = DMatrix::zeros(r, r);
            let mut b = DVector::zeros(r);
            let mut any = false;
            for j in (0..m).filter(|&j| seen[i][j]) {
                let a = coef.column(j);
                g += a * a.transpose() * time_w[j];
                b += a * (data[(i, j)] * time_w[j]);
                any = true;
            }
            if !any {
                continue;
            }
            if let Some(x) = solve_normal(g, b) {
                modes.row_mut(i).copy_from(&x.transpose());
            }
        }
    }
}

/// Orthonormal basis (grid inner product) of the span of `modes`.
fn orthonormalize<T: Real>(modes: &DMatrix<T>, space_w: &[T]) -> DMatrix<T> {
    let sqrt_w: Vec<T> = space_w.iter().map(|w| w.sqrt()).collect();
    let scaled = DMatrix::from_fn(modes.nrows(), modes.ncols(), |i, j| modes[(i, j)] * sqrt_w[i]);
    let svd = thin_svd(&scaled, modes.ncols());
    let mut out = DMatrix::from_fn(modes.nrows(), modes.ncols(), |i, j| svd.u[(i, j)] / sqrt_w[i]);
    fix_signs(&mut out);
    out
}

/// Number of refinement passes on the observed entries after the filled SVD.
pub const DEFAULT_REFINEMENT_PASSES: usize = 3;

pub(crate) fn fit_frame<T: Real>(
    snapshots: &SnapshotSet<T>,
    path: &[T],
    fam: &TransformFamily<T>,
    r: usize,
    passes: usize,
) -> Result<Frame<T>> {
    let (mut data, seen) = storage_data(snapshots, path, fam);
    fill_nearest_in_time(&mut data, &seen);
    let pod = weighted_pod(fam.storage_grid(), snapshots.components(), snapshots.times(), &data, r)?;
    let mut modes = pod.modes;
    if passes > 0 {
        let space_w = space_weights(fam.storage_grid(), snapshots.components());
        let time_w: Vec<T> = (0..snapshots.len()).map(|j| time_weight(snapshots.times(), j)).collect();
        refine_on_observed(&data, &seen, &mut modes, &space_w, &time_w, passes);
        modes = orthonormalize(&modes, &space_w);
    }
    let coefficients = fit_coefficients(fam, &modes, path, snapshots)?;
    Frame::new(fam.clone(), path.to_vec(), modes, coefficients, pod.spectrum)
}
