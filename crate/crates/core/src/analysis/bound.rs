use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::fom::{relative_error, SnapshotSet};
use crate::rom::RomTrajectory;
use crate::{Error, Real, Result};

/// Stability constants of the full-order semigroup, `‖S(t)‖ ≤ C̃ e^{ωt}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub c_tilde: f64,
    pub omega: f64,
}

impl Default for BoundParams {
    /// Contraction semigroup, valid for the dissipative periodic models.
    fn default() -> Self {
        Self { c_tilde: 1.0, omega: 0.0 }
    }
}

/// `C̃ e^{ωt} (J_IV + t · sup_{s ≤ t} ‖R(s)‖)` at every time.
pub fn error_bound<T: Real>(j_iv: T, residual_norms: &[T], times: &[T], params: BoundParams) -> Result<Vec<T>> {
    if !(params.c_tilde >= 1.0 && params.omega >= 0.0) {
        return Err(Error::InvalidArgument(format!("bound needs C_tilde >= 1 and omega >= 0, got {params:?}")));
    }
    if residual_norms.len() != times.len() {
        return Err(Error::Dimension("one residual norm per time is needed".into()));
    }
    let c = T::lit(params.c_tilde);
    let omega = T::lit(params.omega);
    let mut sup = T::zero();
    Ok(times
        .iter()
        .zip(residual_norms)
        .map(|(&t, &r)| {
            sup = sup.max(r);
            c * (omega * t).exp() * (j_iv + t * sup)
        })
        .collect())
}

/// `‖truth(t_k) − approx(t_k)‖` per sample.
pub fn pointwise_error_norms<T: Real>(truth: &SnapshotSet<T>, approx: &SnapshotSet<T>) -> Result<Vec<T>> {
    if truth.data().shape() != approx.data().shape() {
        return Err(Error::Dimension("error of differently shaped snapshot sets".into()));
    }
    Ok((0..truth.len())
        .map(|k| {
            let d: Vec<T> = truth.column(k).iter().zip(approx.column(k)).map(|(a, b)| *a - *b).collect();
            truth.grid().norm(&d)
        })
        .collect())
}

/// Offline and online accuracy of one reduced run.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport<T: Real> {
    pub offline_error: T,
    pub online_error: T,
    /// `c·n × m` difference truth − reconstruction, when requested.
    pub pointwise_error: Option<DMatrix<T>>,
    pub residual_sup: T,
    pub j_iv: T,
    pub bound_curve: Vec<T>,
    pub bound_params: BoundParams,
    /// `‖e(t_k)‖`, for comparison with `bound_curve`.
    pub error_curve: Vec<T>,
}

impl<T: Real> ErrorReport<T> {
    pub fn build(
        truth: &SnapshotSet<T>,
        reconstruction: &SnapshotSet<T>,
        offline_error: T,
        traj: &RomTrajectory<T>,
        j_iv: T,
        params: BoundParams,
        keep_pointwise: bool,
    ) -> Result<Self> {
        let online_error = relative_error(truth, reconstruction)?;
        let bound_curve = error_bound(j_iv, &traj.residual_norms, &traj.times, params)?;
        let error_curve = pointwise_error_norms(truth, reconstruction)?;
        let residual_sup = traj.residual_norms.iter().fold(T::zero(), |m, r| m.max(*r));
        Ok(Self {
            offline_error,
            online_error,
            pointwise_error: keep_pointwise.then(|| truth.data() - reconstruction.data()),
            residual_sup,
            j_iv,
            bound_curve,
            bound_params: params,
            error_curve,
        })
    }

    /// True when the envelope is at least the actual error at every sample.
    pub fn bound_holds(&self) -> bool {
        self.error_curve.iter().zip(&self.bound_curve).all(|(e, b)| *e <= *b)
    }
}
