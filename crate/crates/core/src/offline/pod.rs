use nalgebra::DMatrix;

use super::{virtual_fill, Decomposition, Frame};
use crate::fom::{time_weight, SnapshotSet};
use crate::linalg::thin_svd;
use crate::numerics::{Grid, TransformFamily, TransformKind};
use crate::{Error, Real, Result};

/// Leading modes of a data matrix in the grid- and time-weighted norm.
pub(crate) struct WeightedPod<T: Real> {
    pub modes: DMatrix<T>,
    pub coefficients: DMatrix<T>,
    pub spectrum: Vec<T>,
}

/// Per-row spatial quadrature weights of stacked `components`-field data.
pub(crate) fn space_weights<T: Real>(grid: &Grid<T>, components: usize) -> Vec<T> {
    let w = grid.weights();
    (0..components).flat_map(|_| w.iter().copied()).collect()
}

/// Number of singular values above the usual numerical-rank threshold.
pub(crate) fn numerical_rank<T: Real>(spectrum: &[T], rows: usize, cols: usize) -> usize {
    let Some(&top) = spectrum.first() else { return 0 };
    let tol = top * T::machine_eps() * T::from_usize_lossy(rows.max(cols));
    spectrum.iter().filter(|s| **s > tol).count()
}

/// Flips each column so its largest-magnitude entry is positive.
pub(crate) fn fix_signs<T: Real>(modes: &mut DMatrix<T>) {
    for mut col in modes.column_iter_mut() {
        let mut best = T::zero();
        for v in col.iter() {
            if v.abs() > best.abs() {
                best = *v;
            }
        }
        if best < T::zero() {
            col.neg_mut();
        }
    }
}

/// SVD of `diag(√w_space) · data · diag(√w_time)`, mapped back to modes that
/// are orthonormal in the grid inner product. Coefficients are projections.
pub(crate) fn weighted_pod<T: Real>(
    grid: &Grid<T>,
    components: usize,
    times: &[T],
    data: &DMatrix<T>,
    r: usize,
) -> Result<WeightedPod<T>> {
    let (rows, m) = data.shape();
    if rows != components * grid.n() {
        return Err(Error::Dimension(format!("data has {rows} rows, grid needs {}", components * grid.n())));
    }
    if r == 0 {
        return Err(Error::InvalidArgument("rank must be positive".into()));
    }
    let ws: Vec<T> = space_weights(grid, components).into_iter().map(|w| w.sqrt()).collect();
    let wt: Vec<T> = (0..m).map(|j| time_weight(times, j).sqrt()).collect();
    let scaled = DMatrix::from_fn(rows, m, |i, j| data[(i, j)] * ws[i] * wt[j]);
    let svd = thin_svd(&scaled, r);
    let attainable = numerical_rank(&svd.spectrum, rows, m);
    if r > attainable {
        return Err(Error::RankDeficient { requested: r, attainable });
    }
    let mut modes = DMatrix::from_fn(rows, r, |i, j| svd.u[(i, j)] / ws[i]);
    fix_signs(&mut modes);
    let coefficients = project(grid, &modes, data);
    Ok(WeightedPod { modes, coefficients, spectrum: svd.spectrum })
}

/// `⟨z_k, φ_i⟩` for every mode column and data column.
pub(crate) fn project<T: Real>(grid: &Grid<T>, modes: &DMatrix<T>, data: &DMatrix<T>) -> DMatrix<T> {
    let rows = modes.nrows();
    let c = rows / grid.n();
    let w = space_weights(grid, c);
    let weighted = DMatrix::from_fn(rows, modes.ncols(), |i, j| modes[(i, j)] * w[i]);
    weighted.transpose() * data
}

/// Classical POD: one identity frame with the `r` leading modes.
pub fn compute_pod<T: Real>(snapshots: &SnapshotSet<T>, r: usize) -> Result<Decomposition<T>> {
    let fam = TransformFamily::identity(*snapshots.grid());
    let path = vec![T::zero(); snapshots.len()];
    let frame = pod_frame(snapshots.grid(), snapshots.components(), snapshots.times(), snapshots.data(), fam, path, r)?;
    Decomposition::from_frames(snapshots, vec![frame])
}

fn pod_frame<T: Real>(
    grid: &Grid<T>,
    components: usize,
    times: &[T],
    data: &DMatrix<T>,
    fam: TransformFamily<T>,
    path: Vec<T>,
    r: usize,
) -> Result<Frame<T>> {
    let pod = weighted_pod(grid, components, times, data, r)?;
    Frame::new(fam, path, pod.modes, pod.coefficients, pod.spectrum)
}

fn check_path<T: Real>(snapshots: &SnapshotSet<T>, path: &[T], fam: &TransformFamily<T>) -> Result<()> {
    if path.len() != snapshots.len() {
        return Err(Error::Dimension(format!("path has {} samples, snapshots {}", path.len(), snapshots.len())));
    }
    if path.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidArgument("path must be finite".into()));
    }
    if !fam.grid().same_as(snapshots.grid()) {
        return Err(Error::Dimension("transform family and snapshots use different grids".into()));
    }
    Ok(())
}

/// Back-transforms every column of `data` into the storage frame.
pub(crate) fn back_transform_columns<T: Real>(fam: &TransformFamily<T>, path: &[T], data: &DMatrix<T>) -> Result<DMatrix<T>> {
    let rows = data.nrows();
    let c = rows / fam.grid().n();
    let ns = fam.storage_grid().n();
    let mut out = DMatrix::zeros(c * ns, data.ncols());
    for (k, &p) in path.iter().enumerate() {
        let col = &data.as_slice()[k * rows..(k + 1) * rows];
        out.column_mut(k).copy_from_slice(&fam.back_transform(p, col)?);
    }
    Ok(out)
}

/// Shifted POD with a single frame and prescribed path.
///
/// Isometric families reduce to POD of the back-transformed data. A
/// virtual-domain family has no inverse on the physical grid; its modes come
/// from the masked storage-frame data (see [`compute_spod_virtual`]).
pub fn compute_spod_single_frame<T: Real>(
    snapshots: &SnapshotSet<T>,
    path: &[T],
    fam: &TransformFamily<T>,
    r: usize,
) -> Result<Decomposition<T>> {
    check_path(snapshots, path, fam)?;
    match fam.kind() {
        TransformKind::VirtualDomainShift => compute_spod_virtual(snapshots, path, fam, r, virtual_fill::DEFAULT_REFINEMENT_PASSES),
        _ => {
            let back = back_transform_columns(fam, path, snapshots.data())?;
            let frame = pod_frame(snapshots.grid(), snapshots.components(), snapshots.times(), &back, fam.clone(), path.to_vec(), r)?;
            Decomposition::from_frames(snapshots, vec![frame])
        }
    }
}

/// Shifted POD on a virtual domain. Storage nodes are filled from the
/// snapshots wherever they are observed through the path and unobserved
/// entries take the nearest observed value in time. The SVD of that matrix
/// starts `refinement_passes` alternating least-squares passes on the
/// observed entries only. Coefficients are least-squares fits of the
/// restricted shifted modes.
pub fn compute_spod_virtual<T: Real>(
    snapshots: &SnapshotSet<T>,
    path: &[T],
    fam: &TransformFamily<T>,
    r: usize,
    refinement_passes: usize,
) -> Result<Decomposition<T>> {
    check_path(snapshots, path, fam)?;
    if fam.kind() != TransformKind::VirtualDomainShift {
        return Err(Error::InvalidArgument("expected a virtual-domain shift".into()));
    }
    let frame = virtual_fill::fit_frame(snapshots, path, fam, r, refinement_passes)?;
    Decomposition::from_frames(snapshots, vec![frame])
}

/// One frame of a multi-frame decomposition before fitting.
#[derive(Clone, Debug)]
pub struct FrameSpec<T: Real> {
    pub transform: TransformFamily<T>,
    pub path: Vec<T>,
    pub rank: usize,
}

/// Default number of block-coordinate sweeps.
pub const DEFAULT_SWEEPS: usize = 10;

/// Multi-frame shifted POD by block-coordinate descent over the frames.
///
/// Each sweep refits frame `f` to the snapshots minus the other frames'
/// reconstructions. Stops after `sweeps` passes or once a sweep improves the
/// offline error by less than `1e-10`.
pub fn compute_spod_multi_frame<T: Real>(
    snapshots: &SnapshotSet<T>,
    frames_init: &[FrameSpec<T>],
    sweeps: usize,
) -> Result<Decomposition<T>> {
    if sweeps == 0 {
        return Err(Error::InvalidArgument("at least one sweep is required".into()));
    }
    if frames_init.is_empty() {
        return Err(Error::InvalidArgument("at least one frame is required".into()));
    }
    for spec in frames_init {
        check_path(snapshots, &spec.path, &spec.transform)?;
        if !spec.transform.is_isometric() {
            return Err(Error::Unsupported("multi-frame sPOD needs isometric transforms".into()));
        }
    }
    let grid = *snapshots.grid();
    let c = snapshots.components();
    let times = snapshots.times();
    let data = snapshots.data();
    let mut contributions: Vec<DMatrix<T>> = frames_init.iter().map(|_| DMatrix::zeros(data.nrows(), data.ncols())).collect();
    let mut frames: Vec<Option<Frame<T>>> = vec![None; frames_init.len()];
    let mut errors: Vec<T> = Vec::new();
    let threshold = T::lit(1e-10);
    for sweep in 0..sweeps {
        for (f, spec) in frames_init.iter().enumerate() {
            let mut residual = data.clone();
            for (g, contrib) in contributions.iter().enumerate() {
                if g != f {
                    residual -= contrib;
                }
            }
            let back = back_transform_columns(&spec.transform, &spec.path, &residual)?;
            let frame = pod_frame(&grid, c, times, &back, spec.transform.clone(), spec.path.clone(), spec.rank)?;
            for k in 0..data.ncols() {
                contributions[f].column_mut(k).copy_from_slice(&frame.physical_field(k)?);
            }
            frames[f] = Some(frame);
        }
        let mut total = DMatrix::zeros(data.nrows(), data.ncols());
        for contrib in &contributions {
            total += contrib;
        }
        let err = crate::fom::relative_error_data(&grid, times, data, &total)?;
        log::debug!("sPOD sweep {sweep}: offline error {err}");
        let stalled = errors.last().is_some_and(|prev: &T| *prev - err < threshold);
        errors.push(err);
        if stalled {
            break;
        }
    }
    let frames: Vec<Frame<T>> = frames.into_iter().map(|f| f.expect("every frame is fitted in the first sweep")).collect();
    let mut dec = Decomposition::from_frames(snapshots, frames)?;
    dec.set_sweep_errors(errors);
    Ok(dec)
}
