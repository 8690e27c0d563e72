//! Small linear-algebra helpers on top of nalgebra: a row-sparse matrix, a
//! banded LU without pivoting, and a thin SVD that switches to the method of
//! snapshots for large inputs.

use nalgebra::{DMatrix, DVector, LU, Dyn};

use crate::{Error, Real, Result};

/// Row-wise sparse matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix<T> {
    ncols: usize,
    rows: Vec<Vec<(usize, T)>>,
}

impl<T: Real> SparseMatrix<T> {
    pub fn from_rows(ncols: usize, mut rows: Vec<Vec<(usize, T)>>) -> Self {
        for r in &mut rows {
            r.sort_by_key(|e| e.0);
            let mut merged: Vec<(usize, T)> = Vec::with_capacity(r.len());
            for &(c, v) in r.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == c => last.1 += v,
                    _ => merged.push((c, v)),
                }
            }
            *r = merged;
        }
        Self { ncols, rows }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { ncols, rows: vec![Vec::new(); nrows] }
    }

    pub fn identity(n: usize) -> Self {
        Self { ncols: n, rows: (0..n).map(|k| vec![(k, T::one())]).collect() }
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn row(&self, k: usize) -> &[(usize, T)] {
        &self.rows[k]
    }

    pub fn rows_mut(&mut self) -> &mut Vec<Vec<(usize, T)>> {
        &mut self.rows
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.rows.len()];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[T], y: &mut [T]) {
        for (yk, row) in y.iter_mut().zip(&self.rows) {
            let mut s = T::zero();
            for &(c, v) in row {
                s += v * x[c];
            }
            *yk = s;
        }
    }

    /// `y += a * self * x`.
    pub fn mul_vec_acc(&self, a: T, x: &[T], y: &mut [T]) {
        for (yk, row) in y.iter_mut().zip(&self.rows) {
            let mut s = T::zero();
            for &(c, v) in row {
                s += v * x[c];
            }
            *yk += a * s;
        }
    }

    pub fn scaled(&self, a: T) -> Self {
        Self {
            ncols: self.ncols,
            rows: self.rows.iter().map(|r| r.iter().map(|&(c, v)| (c, a * v)).collect()).collect(),
        }
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: T, other: &Self, b: T) -> Self {
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(r1, r2)| {
                r1.iter().map(|&(c, v)| (c, a * v)).chain(r2.iter().map(|&(c, v)| (c, b * v))).collect()
            })
            .collect();
        Self::from_rows(self.ncols, rows)
    }

    /// Places `self` at block offset `(r0, c0)` inside `target`.
    pub fn embed_into(&self, target: &mut Vec<Vec<(usize, T)>>, r0: usize, c0: usize) {
        for (k, row) in self.rows.iter().enumerate() {
            target[r0 + k].extend(row.iter().map(|&(c, v)| (c0 + c, v)));
        }
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        let mut m = DMatrix::zeros(self.rows.len(), self.ncols);
        for (k, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                m[(k, c)] += v;
            }
        }
        m
    }

    /// Lower and upper bandwidth.
    pub fn bandwidth(&self) -> (usize, usize) {
        let mut kl = 0;
        let mut ku = 0;
        for (k, row) in self.rows.iter().enumerate() {
            for &(c, _) in row {
                if c < k {
                    kl = kl.max(k - c);
                } else {
                    ku = ku.max(c - k);
                }
            }
        }
        (kl, ku)
    }
}

/// Banded LU factorization without pivoting (for diagonally dominant systems).
#[derive(Clone, Debug)]
pub struct BandLu<T> {
    n: usize,
    kl: usize,
    ku: usize,
    // Row-major band storage: entry (i, j) at i * width + (j + kl - i).
    band: Vec<T>,
}

impl<T: Real> BandLu<T> {
    pub fn factor(a: &SparseMatrix<T>) -> Result<Self> {
        let n = a.nrows();
        let (kl, ku) = a.bandwidth();
        let width = kl + ku + 1;
        let mut band = vec![T::zero(); n * width];
        for i in 0..n {
            for &(j, v) in a.row(i) {
                band[i * width + (j + kl - i)] += v;
            }
        }
        let scale = band.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        for k in 0..n {
            let pivot = band[k * width + kl];
            if pivot.abs() <= T::machine_eps() * scale {
                return Err(Error::StepFailure { t: f64::NAN, detail: format!("zero pivot in banded solve at row {k}") });
            }
            for i in k + 1..(k + kl + 1).min(n) {
                let l = band[i * width + (k + kl - i)] / pivot;
                band[i * width + (k + kl - i)] = l;
                if l == T::zero() {
                    continue;
                }
                for j in k + 1..(k + ku + 1).min(n) {
                    let u = band[k * width + (j + kl - k)];
                    band[i * width + (j + kl - i)] -= l * u;
                }
            }
        }
        Ok(Self { n, kl, ku, band })
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        let w = self.kl + self.ku + 1;
        let n = self.n;
        for i in 0..n {
            let mut s = b[i];
            for j in i.saturating_sub(self.kl)..i {
                s -= self.band[i * w + (j + self.kl - i)] * b[j];
            }
            b[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..(i + self.ku + 1).min(n) {
                s -= self.band[i * w + (j + self.kl - i)] * b[j];
            }
            b[i] = s / self.band[i * w + self.kl];
        }
    }
}

/// Factorization used for the linear systems inside implicit steps.
#[derive(Clone, Debug)]
pub enum Factorized<T: Real> {
    Dense(LU<T, Dyn, Dyn>),
    Banded(BandLu<T>),
}

impl<T: Real> Factorized<T> {
    /// Banded elimination when the bandwidth is small, dense LU otherwise.
    pub fn new(a: &SparseMatrix<T>) -> Result<Self> {
        let n = a.nrows();
        let (kl, ku) = a.bandwidth();
        if kl + ku + 1 <= 9 && n > 4 * (kl + ku + 1) {
            Ok(Factorized::Banded(BandLu::factor(a)?))
        } else {
            Self::dense(a.to_dense())
        }
    }

    pub fn dense(a: DMatrix<T>) -> Result<Self> {
        let lu = a.lu();
        if !lu.is_invertible() {
            return Err(Error::StepFailure { t: f64::NAN, detail: "singular Newton matrix".into() });
        }
        Ok(Factorized::Dense(lu))
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        match self {
            Factorized::Dense(lu) => {
                let mut v = DVector::from_column_slice(b);
                lu.solve_mut(&mut v);
                b.copy_from_slice(v.as_slice());
            }
            Factorized::Banded(lu) => lu.solve_in_place(b),
        }
    }
}

/// Leading singular triplets of `a`.
#[derive(Clone, Debug)]
pub struct ThinSvd<T: Real> {
    /// Left singular vectors as columns.
    pub u: DMatrix<T>,
    /// Singular values, non-increasing.
    pub s: Vec<T>,
    /// Right singular vectors as columns (`a ≈ u diag(s) vᵀ`).
    pub v: DMatrix<T>,
    /// All singular values that were computed (for decay plots).
    pub spectrum: Vec<T>,
}

/// Above this many flops the SVD goes through the smaller Gram matrix.
const DIRECT_SVD_BUDGET: f64 = 2.0e9;

/// Full SVD sorted by decreasing singular value, or `None` when the
/// factorization does not reproduce `a` (the bidiagonal QR iteration can
/// stall on exactly rank-deficient input).
fn checked_svd<T: Real>(a: &DMatrix<T>) -> Option<(DMatrix<T>, Vec<T>, DMatrix<T>)> {
    let svd = a.clone().try_svd(true, true, T::machine_eps(), 0)?;
    let u = svd.u?;
    let vt = svd.v_t?;
    let rebuilt = &u * DMatrix::from_diagonal(&svd.singular_values) * &vt;
    let scale = a.norm().max(T::lit(f64::MIN_POSITIVE));
    let (m, n) = a.shape();
    if (rebuilt - a).norm() > T::lit(100.0) * T::machine_eps() * T::from_usize_lossy(m.max(n)) * scale {
        return None;
    }
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].partial_cmp(&svd.singular_values[i]).unwrap());
    let s: Vec<T> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let mut us = DMatrix::zeros(m, order.len());
    let mut vs = DMatrix::zeros(n, order.len());
    for (c, &i) in order.iter().enumerate() {
        us.set_column(c, &u.column(i));
        vs.set_column(c, &vt.row(i).transpose());
    }
    Some((us, s, vs))
}

/// Computes the leading `k` singular triplets of `a`.
pub fn thin_svd<T: Real>(a: &DMatrix<T>, k: usize) -> ThinSvd<T> {
    let (m, n) = a.shape();
    let small = m.min(n) as f64;
    let k = k.min(m.min(n));
    if (m as f64) * (n as f64) * small <= DIRECT_SVD_BUDGET {
        let direct = checked_svd(a).or_else(|| checked_svd(&a.transpose()).map(|(u, s, v)| (v, s, u)));
        if let Some((u, spectrum, v)) = direct {
            let uk = u.columns(0, k).into_owned();
            let vk = v.columns(0, k).into_owned();
            return ThinSvd { u: uk, s: spectrum[..k].to_vec(), v: vk, spectrum };
        }
        log::warn!("direct SVD failed its reconstruction check; using the Gram matrix");
    }
    // Method of snapshots on the smaller side.
    let transpose = m < n;
    let g = if transpose { a * a.transpose() } else { a.transpose() * a };
    let small_dim = g.nrows();
    let eig = g.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
    let spectrum: Vec<T> = order.iter().map(|&i| eig.eigenvalues[i].max(T::zero()).sqrt()).collect();
    let mut w = DMatrix::zeros(small_dim, k);
    for (c, &i) in order.iter().take(k).enumerate() {
        w.set_column(c, &eig.eigenvectors.column(i));
    }
    let mut other = if transpose { a.transpose() * &w } else { a * &w };
    for c in 0..k {
        let s = spectrum[c];
        if s > T::zero() {
            other.column_mut(c).scale_mut(T::one() / s);
        }
    }
    let (u, v) = if transpose { (w, other) } else { (other, w) };
    ThinSvd { u, s: spectrum[..k].to_vec(), v, spectrum }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn banded_solve_matches_dense() {
        let n = 30;
        let rows = (0..n)
            .map(|k| {
                let mut r = vec![(k, 4.0 + k as f64 * 0.01)];
                if k > 0 {
                    r.push((k - 1, -1.0));
                }
                if k + 1 < n {
                    r.push((k + 1, -1.5));
                }
                if k + 2 < n {
                    r.push((k + 2, 0.25));
                }
                r
            })
            .collect();
        let a = SparseMatrix::from_rows(n, rows);
        let b: Vec<f64> = (0..n).map(|k| (k as f64).cos()).collect();
        let mut x = b.clone();
        let f = Factorized::new(&a).unwrap();
        assert!(matches!(f, Factorized::Banded(_)));
        f.solve_in_place(&mut x);
        let r = a.mul_vec(&x);
        for (p, q) in r.iter().zip(&b) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn svd_of_exact_rank_one_matrix() {
        let wt = [0.05f64, 0.1, 0.1, 0.1, 0.05].map(f64::sqrt);
        let a = DMatrix::from_fn(32, 5, |i, j| (2.0 + (6.0 * (i as f64 * (1.0 / 32.0))).sin()) * 0.03125f64.sqrt() * wt[j]);
        let svd = thin_svd(&a, 1);
        let rebuilt = &svd.u * svd.s[0] * svd.v.transpose();
        assert!((rebuilt - &a).norm() < 1e-13);
        assert!((svd.s[0] - a.norm()).abs() < 1e-13);
    }

    #[test]
    fn svd_paths_agree() {
        let a = DMatrix::<f64>::from_fn(40, 25, |i, j| ((i * i * 7 + j * 3 + i * j) as f64 * 0.37).sin() / (1.0 + j as f64));
        let direct = thin_svd(&a, 3);
        let g = a.transpose() * &a;
        let eig = g.symmetric_eigen();
        let mut ev: Vec<f64> = eig.eigenvalues.iter().map(|v| v.max(0.0).sqrt()).collect();
        ev.sort_by(|x, y| y.partial_cmp(x).unwrap());
        for c in 0..3 {
            assert!((direct.s[c] - ev[c]).abs() < 1e-10 * ev[0], "{} vs {}", direct.s[c], ev[c]);
            let av = &a * direct.v.column(c);
            assert!((av - direct.u.column(c) * direct.s[c]).norm() < 1e-10);
        }
    }
}
