use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::linalg::{Factorized, SparseMatrix};
use crate::{Error, Real, Result};

/// Nonautonomous ODE `y' = f(t, y)`.
pub trait OdeSystem<T: Real> {
    fn dim(&self) -> usize;

    fn rhs(&self, t: T, y: &[T], out: &mut [T]) -> Result<()>;

    /// Jacobian of `f` in `y`; forward differences unless overridden.
    fn jacobian(&self, t: T, y: &[T]) -> Result<Jacobian<T>> {
        let n = y.len();
        let mut f0 = vec![T::zero(); n];
        self.rhs(t, y, &mut f0)?;
        let mut jac = DMatrix::zeros(n, n);
        let mut yp = y.to_vec();
        let mut fp = vec![T::zero(); n];
        for j in 0..n {
            let h = T::lit(1e-7) * (T::one() + y[j].abs());
            yp[j] = y[j] + h;
            self.rhs(t, &yp, &mut fp)?;
            for i in 0..n {
                jac[(i, j)] = (fp[i] - f0[i]) / h;
            }
            yp[j] = y[j];
        }
        Ok(Jacobian::Dense(jac))
    }

    /// True when the Jacobian does not depend on `(t, y)`, so one
    /// factorization serves every implicit step.
    fn constant_jacobian(&self) -> bool {
        false
    }

    /// Hook applied to every accepted state.
    fn post_step(&self, _t: T, _y: &mut [T]) {}
}

#[derive(Clone, Debug)]
pub enum Jacobian<T> {
    Dense(DMatrix<T>),
    Sparse(SparseMatrix<T>),
}

impl<T: Real> Jacobian<T> {
    /// Factorizes `I − a·J`.
    fn shifted_factor(&self, a: T) -> Result<Factorized<T>> {
        match self {
            Jacobian::Dense(j) => {
                let n = j.nrows();
                Factorized::dense(DMatrix::identity(n, n) - j * a)
            }
            Jacobian::Sparse(j) => {
                let n = j.nrows();
                Factorized::new(&SparseMatrix::identity(n).combine(T::one(), j, -a))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ImplicitTrapezoid,
    #[serde(alias = "rk45")]
    AdaptiveRk45,
    #[serde(alias = "rk23")]
    AdaptiveRk23,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonSpec {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for NewtonSpec {
    fn default() -> Self {
        Self { max_iter: 25, tol: 1e-10 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorSpec {
    pub scheme: Scheme,
    /// Step size of the trapezoid rule and sample spacing of every scheme.
    pub tau: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub newton: NewtonSpec,
}

impl Default for IntegratorSpec {
    fn default() -> Self {
        Self { scheme: Scheme::ImplicitTrapezoid, tau: 5e-3, rel_tol: 1e-3, abs_tol: 1e-6, newton: NewtonSpec::default() }
    }
}

impl IntegratorSpec {
    pub fn trapezoid(tau: f64) -> Self {
        Self { tau, ..Self::default() }
    }

    pub fn adaptive(scheme: Scheme, tau: f64, rel_tol: f64, abs_tol: f64) -> Self {
        Self { scheme, tau, rel_tol, abs_tol, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.tau > 0.0 && self.rel_tol > 0.0 && self.abs_tol > 0.0 && self.newton.tol > 0.0 && self.newton.max_iter > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid integrator settings {self:?}")))
        }
    }
}

/// Which states to keep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sampling {
    /// Every multiple of `tau` up to `t_end` (adaptive steps are clipped to hit them).
    Uniform,
    /// Only the initial and final state; adaptive steps are clipped at `t_end` only.
    EndOnly,
}

#[derive(Clone, Debug)]
pub struct OdeSolution<T> {
    pub times: Vec<T>,
    pub states: Vec<Vec<T>>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

/// Number of `tau` steps that reach `t_end`.
pub fn step_count(t_end: f64, tau: f64) -> usize {
    (t_end / tau).round().max(0.0) as usize
}

/// Integrates from `t = 0` to `t_end`.
pub fn integrate<T: Real, S: OdeSystem<T> + ?Sized>(
    sys: &S,
    y0: &[T],
    spec: &IntegratorSpec,
    t_end: T,
    sampling: Sampling,
) -> Result<OdeSolution<T>> {
    spec.validate()?;
    if y0.len() != sys.dim() {
        return Err(Error::Dimension(format!("initial state has length {}, system {}", y0.len(), sys.dim())));
    }
    let tau = T::lit(spec.tau);
    let steps = step_count(t_end.as_f64(), spec.tau);
    let targets: Vec<T> = match sampling {
        Sampling::Uniform => (1..=steps).map(|k| if k == steps { t_end } else { T::from_usize_lossy(k) * tau }).collect(),
        Sampling::EndOnly => vec![t_end],
    };
    match spec.scheme {
        Scheme::ImplicitTrapezoid => trapezoid(sys, y0, spec, &targets, steps, t_end, sampling),
        Scheme::AdaptiveRk45 => adaptive(sys, y0, spec, &targets, &DORMAND_PRINCE),
        Scheme::AdaptiveRk23 => adaptive(sys, y0, spec, &targets, &BOGACKI_SHAMPINE),
    }
}

fn inf_norm<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

fn trapezoid<T: Real, S: OdeSystem<T> + ?Sized>(
    sys: &S,
    y0: &[T],
    spec: &IntegratorSpec,
    targets: &[T],
    steps: usize,
    t_end: T,
    sampling: Sampling,
) -> Result<OdeSolution<T>> {
    let n = y0.len();
    let tau = T::lit(spec.tau);
    let half = tau * T::lit(0.5);
    let tol = T::lit(spec.newton.tol);
    let mut fixed: Option<Factorized<T>> = None;
    if sys.constant_jacobian() {
        fixed = Some(sys.jacobian(T::zero(), y0)?.shifted_factor(half)?);
    }
    let mut y = y0.to_vec();
    let mut times = vec![T::zero()];
    let mut states = vec![y.clone()];
    let mut f_old = vec![T::zero(); n];
    let mut f_new = vec![T::zero(); n];
    let mut res = vec![T::zero(); n];
    let mut t = T::zero();
    for k in 1..=steps {
        let t_new = if k == steps { t_end } else { T::from_usize_lossy(k) * tau };
        let h = t_new - t;
        let hh = h * T::lit(0.5);
        sys.rhs(t, &y, &mut f_old)?;
        let mut y_new: Vec<T> = y.iter().zip(&f_old).map(|(a, b)| *a + h * *b).collect();
        let mut converged = false;
        for _ in 0..=spec.newton.max_iter {
            sys.rhs(t_new, &y_new, &mut f_new)?;
            for i in 0..n {
                res[i] = y_new[i] - y[i] - hh * (f_old[i] + f_new[i]);
            }
            if inf_norm(&res) <= tol {
                converged = true;
                break;
            }
            let step_factor;
            let lu = match (&fixed, hh == half) {
                (Some(lu), true) => lu,
                _ => {
                    step_factor = sys.jacobian(t_new, &y_new)?.shifted_factor(hh).map_err(|e| at_time(e, t_new))?;
                    &step_factor
                }
            };
            lu.solve_in_place(&mut res);
            if res.iter().any(|v| !v.is_finite()) {
                break;
            }
            for i in 0..n {
                y_new[i] -= res[i];
            }
        }
        if !converged {
            return Err(Error::StepFailure {
                t: t_new.as_f64(),
                detail: format!("Newton did not reach {:e} in {} iterations", spec.newton.tol, spec.newton.max_iter),
            });
        }
        sys.post_step(t_new, &mut y_new);
        y = y_new;
        t = t_new;
        if sampling == Sampling::Uniform || k == steps {
            times.push(t);
            states.push(y.clone());
        }
    }
    debug_assert!(times.len() == targets.len() + 1 || steps == 0);
    Ok(OdeSolution { times, states, accepted_steps: steps, rejected_steps: 0 })
}

fn at_time(e: Error, t: impl Real) -> Error {
    match e {
        Error::StepFailure { detail, .. } => Error::StepFailure { t: t.as_f64(), detail },
        other => other,
    }
}

struct Tableau {
    a: &'static [&'static [f64]],
    c: &'static [f64],
    b: &'static [f64],
    /// `b − b̂`
    e: &'static [f64],
    /// Exponent of the elementary controller, `1 / (lower order + 1)`.
    k: f64,
}

const DORMAND_PRINCE: Tableau = Tableau {
    a: &[
        &[],
        &[1.0 / 5.0],
        &[3.0 / 40.0, 9.0 / 40.0],
        &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
        &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
        &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
        &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ],
    c: &[0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0],
    b: &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0],
    e: &[71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0],
    k: 1.0 / 5.0,
};

const BOGACKI_SHAMPINE: Tableau = Tableau {
    a: &[&[], &[1.0 / 2.0], &[0.0, 3.0 / 4.0], &[2.0 / 9.0, 1.0 / 3.0, 4.0 / 9.0]],
    c: &[0.0, 1.0 / 2.0, 3.0 / 4.0, 1.0],
    b: &[2.0 / 9.0, 1.0 / 3.0, 4.0 / 9.0, 0.0],
    e: &[2.0 / 9.0 - 7.0 / 24.0, 1.0 / 3.0 - 1.0 / 4.0, 4.0 / 9.0 - 1.0 / 3.0, -1.0 / 8.0],
    k: 1.0 / 3.0,
};

const INITIAL_STEP: f64 = 1e-4;
const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

/// Embedded Runge–Kutta with PI step control and a max-norm error estimate.
fn adaptive<T: Real, S: OdeSystem<T> + ?Sized>(
    sys: &S,
    y0: &[T],
    spec: &IntegratorSpec,
    targets: &[T],
    tab: &Tableau,
) -> Result<OdeSolution<T>> {
    let n = y0.len();
    let stages = tab.c.len();
    let rtol = T::lit(spec.rel_tol);
    let atol = T::lit(spec.abs_tol);
    let beta = 0.4 * tab.k;
    let mut k: Vec<Vec<T>> = vec![vec![T::zero(); n]; stages];
    let mut y = y0.to_vec();
    let mut t = T::zero();
    let mut h = T::lit(INITIAL_STEP);
    let mut err_old = 1e-4f64;
    let mut accepted = 0;
    let mut rejected = 0;
    let mut times = vec![t];
    let mut states = vec![y.clone()];
    let mut ystage = vec![T::zero(); n];
    let mut ynew = vec![T::zero(); n];
    for &target in targets {
        while t < target {
            let remaining = target - t;
            let clipped = h >= remaining;
            let step = if clipped { remaining } else { h };
            if step <= T::lit(16.0) * T::machine_eps() * t.abs().max(T::one()) {
                return Err(Error::StepFailure { t: t.as_f64(), detail: "adaptive step size underflow".into() });
            }
            sys.rhs(t, &y, &mut k[0])?;
            for s in 1..stages {
                ystage.copy_from_slice(&y);
                for (j, &a) in tab.a[s].iter().enumerate() {
                    if a != 0.0 {
                        let a = T::lit(a) * step;
                        for i in 0..n {
                            ystage[i] += a * k[j][i];
                        }
                    }
                }
                let ts = t + T::lit(tab.c[s]) * step;
                sys.rhs(ts, &ystage, &mut k[s])?;
            }
            ynew.copy_from_slice(&y);
            for (s, &b) in tab.b.iter().enumerate() {
                if b != 0.0 {
                    let b = T::lit(b) * step;
                    for i in 0..n {
                        ynew[i] += b * k[s][i];
                    }
                }
            }
            // The last stage of both pairs is evaluated at the new state.
            let mut en = T::zero();
            for i in 0..n {
                let mut e = T::zero();
                for (s, &w) in tab.e.iter().enumerate() {
                    if w != 0.0 {
                        e += T::lit(w) * k[s][i];
                    }
                }
                let sc = atol + rtol * y[i].abs().max(ynew[i].abs());
                en = en.max((e * step).abs() / sc);
            }
            let en = en.as_f64();
            if !en.is_finite() {
                h = step * T::lit(MIN_FACTOR);
                rejected += 1;
                continue;
            }
            if en <= 1.0 {
                let fac = if en > 0.0 {
                    SAFETY * en.powf(-(tab.k - 0.75 * beta)) * err_old.powf(beta)
                } else {
                    MAX_FACTOR
                };
                let fac = fac.clamp(MIN_FACTOR, MAX_FACTOR);
                t = if clipped { target } else { t + step };
                std::mem::swap(&mut y, &mut ynew);
                sys.post_step(t, &mut y);
                accepted += 1;
                err_old = en.max(1e-4);
                h = step * T::lit(fac);
            } else {
                let fac = (SAFETY * en.powf(-tab.k)).max(MIN_FACTOR);
                h = step * T::lit(fac);
                rejected += 1;
            }
        }
        times.push(t);
        states.push(y.clone());
    }
    Ok(OdeSolution { times, states, accepted_steps: accepted, rejected_steps: rejected })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Decay;

    impl OdeSystem<f64> for Decay {
        fn dim(&self) -> usize {
            2
        }

        fn rhs(&self, _t: f64, y: &[f64], out: &mut [f64]) -> Result<()> {
            out[0] = -y[0];
            out[1] = -2.0 * y[1] + y[0];
            Ok(())
        }
    }

    struct Logistic;

    impl OdeSystem<f64> for Logistic {
        fn dim(&self) -> usize {
            1
        }

        fn rhs(&self, _t: f64, y: &[f64], out: &mut [f64]) -> Result<()> {
            out[0] = y[0] * (1.0 - y[0]);
            Ok(())
        }
    }

    fn exact_decay(t: f64) -> [f64; 2] {
        [(-t).exp(), (-t).exp() - (-2.0 * t).exp()]
    }

    #[test]
    fn trapezoid_is_second_order() {
        let err = |tau: f64| {
            let sol = integrate(&Decay, &[1.0, 0.0], &IntegratorSpec::trapezoid(tau), 1.0, Sampling::EndOnly).unwrap();
            let y = sol.states.last().unwrap();
            let e = exact_decay(1.0);
            (y[0] - e[0]).abs().max((y[1] - e[1]).abs())
        };
        let ratio = err(0.02) / err(0.01);
        assert!((ratio.log2() - 2.0).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn trapezoid_newton_on_nonlinear_problem() {
        let sol = integrate(&Logistic, &[0.1], &IntegratorSpec::trapezoid(1e-3), 2.0, Sampling::Uniform).unwrap();
        assert_eq!(sol.times.len(), 2001);
        let exact = 1.0 / (1.0 + 9.0 * (-2.0f64).exp());
        assert!((sol.states[2000][0] - exact).abs() < 1e-6);
    }

    #[test]
    fn adaptive_schemes_meet_tolerance() {
        for scheme in [Scheme::AdaptiveRk45, Scheme::AdaptiveRk23] {
            let spec = IntegratorSpec::adaptive(scheme, 0.1, 1e-6, 1e-9);
            let sol = integrate(&Decay, &[1.0, 0.0], &spec, 1.0, Sampling::Uniform).unwrap();
            assert_eq!(sol.times.len(), 11);
            for (t, y) in sol.times.iter().zip(&sol.states) {
                let e = exact_decay(*t);
                assert!((y[0] - e[0]).abs() < 1e-5 && (y[1] - e[1]).abs() < 1e-5, "{scheme:?} at {t}");
            }
            assert!(sol.accepted_steps > 0);
        }
    }

    #[test]
    fn higher_order_pair_takes_fewer_steps() {
        let run = |s| integrate(&Decay, &[1.0, 0.0], &IntegratorSpec::adaptive(s, 1.0, 1e-8, 1e-10), 5.0, Sampling::EndOnly).unwrap().accepted_steps;
        assert!(run(Scheme::AdaptiveRk45) < run(Scheme::AdaptiveRk23));
    }

    #[test]
    fn deterministic_step_counts() {
        let spec = IntegratorSpec::adaptive(Scheme::AdaptiveRk45, 1.0, 1e-3, 1e-6);
        let a = integrate(&Logistic, &[0.1], &spec, 3.0, Sampling::EndOnly).unwrap();
        let b = integrate(&Logistic, &[0.1], &spec, 3.0, Sampling::EndOnly).unwrap();
        assert_eq!(a.accepted_steps, b.accepted_steps);
        assert_eq!(a.states, b.states);
    }

    #[test]
    fn invalid_spec_rejected() {
        let spec = IntegratorSpec { tau: -1.0, ..IntegratorSpec::default() };
        assert!(integrate(&Decay, &[1.0, 0.0], &spec, 1.0, Sampling::Uniform).is_err());
    }
}
