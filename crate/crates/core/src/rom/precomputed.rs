use nalgebra::{DMatrix, DVector};

use super::system::{MassBlocks, RhsBlocks};
use crate::fom::{FomModel, Term};
use crate::{Real, Result};

/// Reduced operators of one linear term, tested with the modes and with
/// their derivatives.
#[derive(Clone, Debug)]
pub struct LinearBlock<T: Real> {
    pub term: Term,
    /// `⟨φ_i, L φ_j⟩`
    pub tested: DMatrix<T>,
    /// `⟨∂φ_i, L φ_j⟩`
    pub derivative_tested: DMatrix<T>,
}

/// Reduced convective tensors; entry `[i][(j, k)]`.
#[derive(Clone, Debug)]
pub struct QuadraticBlock<T: Real> {
    /// `⟨φ_i, φ_j ∂φ_k⟩`
    pub tested: Vec<DMatrix<T>>,
    /// `⟨∂φ_i, φ_j ∂φ_k⟩`
    pub derivative_tested: Vec<DMatrix<T>>,
}

/// Path-independent reduced operators of a single periodic-shift frame on an
/// equivariant model. Parameters enter only through the term coefficients,
/// so one set serves every `(c, μ)`.
#[derive(Clone, Debug)]
pub struct PrecomputedOperators<T: Real> {
    /// `⟨φ_i, φ_j⟩`
    pub gram_modes: DMatrix<T>,
    /// `⟨φ_i, ∂φ_j⟩`
    pub gram_mode_dmode: DMatrix<T>,
    /// `⟨∂φ_i, ∂φ_j⟩`
    pub gram_dmodes: DMatrix<T>,
    pub linear_reduced: Vec<LinearBlock<T>>,
    pub quadratic_reduced: Option<QuadraticBlock<T>>,
}

fn gram<T: Real>(dot: impl Fn(&[T], &[T]) -> T, a: &[Vec<T>], b: &[Vec<T>]) -> DMatrix<T> {
    DMatrix::from_fn(a.len(), b.len(), |i, j| dot(&a[i], &b[j]))
}

impl<T: Real> PrecomputedOperators<T> {
    /// `modes` holds one mode per column on the model grid.
    pub fn build(model: &FomModel<T>, modes: &DMatrix<T>) -> Result<Self> {
        let grid = *model.grid();
        let dot = |u: &[T], v: &[T]| grid.dot(u, v);
        let rows = modes.nrows();
        let phi: Vec<Vec<T>> = (0..modes.ncols()).map(|i| modes.as_slice()[i * rows..(i + 1) * rows].to_vec()).collect();
        let dphi: Vec<Vec<T>> = phi.iter().map(|p| model.d1().apply(p)).collect();
        let r = phi.len();
        let mut linear_reduced = Vec::new();
        let mut quadratic_reduced = None;
        for (_, term) in model.terms() {
            if term.is_linear() {
                let applied: Vec<Vec<T>> = phi
                    .iter()
                    .map(|p| {
                        let mut out = vec![T::zero(); rows];
                        model.apply_term(T::one(), term, p, &mut out);
                        out
                    })
                    .collect();
                linear_reduced.push(LinearBlock {
                    term,
                    tested: gram(dot, &phi, &applied),
                    derivative_tested: gram(dot, &dphi, &applied),
                });
            } else {
                let mut tested = vec![DMatrix::zeros(r, r); r];
                let mut derivative_tested = vec![DMatrix::zeros(r, r); r];
                for j in 0..r {
                    for k in 0..r {
                        let prod: Vec<T> = phi[j].iter().zip(&dphi[k]).map(|(a, b)| *a * *b).collect();
                        for i in 0..r {
                            tested[i][(j, k)] = dot(&phi[i], &prod);
                            derivative_tested[i][(j, k)] = dot(&dphi[i], &prod);
                        }
                    }
                }
                quadratic_reduced = Some(QuadraticBlock { tested, derivative_tested });
            }
        }
        Ok(Self {
            gram_modes: gram(dot, &phi, &phi),
            gram_mode_dmode: gram(dot, &phi, &dphi),
            gram_dmodes: gram(dot, &dphi, &dphi),
            linear_reduced,
            quadratic_reduced,
        })
    }

    pub(crate) fn mass(&self) -> MassBlocks<T> {
        MassBlocks { m_alpha: self.gram_modes.clone(), n: -&self.gram_mode_dmode, m_p: self.gram_dmodes.clone() }
    }

    /// Right-hand side blocks at coefficients `alpha`, with the term
    /// coefficients taken from `model`.
    pub(crate) fn rhs(&self, model: &FomModel<T>, alpha: &DVector<T>) -> RhsBlocks<T> {
        let r = alpha.len();
        let mut f_alpha = DVector::zeros(r);
        let mut f_p = DVector::zeros(r);
        for (coef, term) in model.terms() {
            if let Some(block) = self.linear_reduced.iter().find(|b| b.term == term) {
                f_alpha += &block.tested * alpha * coef;
                f_p -= &block.derivative_tested * alpha * coef;
            } else if let Some(q) = &self.quadratic_reduced {
                for i in 0..r {
                    f_alpha[i] -= coef * alpha.dot(&(&q.tested[i] * alpha));
                    f_p[i] += coef * alpha.dot(&(&q.derivative_tested[i] * alpha));
                }
            }
        }
        RhsBlocks { f_alpha, f_p }
    }
}
