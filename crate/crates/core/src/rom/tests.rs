use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::fom::{FomModel, IntegratorSpec, ModelKind, OdeSystem};
use crate::numerics::{Grid, GridFunction, TransformFamily};
use crate::Error;

fn grid(n: usize) -> Grid<f64> {
    Grid::periodic(n, 0.0, 1.0).unwrap()
}

fn gaussian(g: Grid<f64>, center: f64, width: f64) -> GridFunction<f64> {
    GridFunction::from_fn(g, move |x: f64| {
        let d = (x - center + 0.5).rem_euclid(1.0) - 0.5;
        (-(d / width).powi(2)).exp()
    })
}

fn model(kind: ModelKind, c: f64, mu: f64, g: Grid<f64>) -> FomModel<f64> {
    FomModel::new(kind, c, mu, g, gaussian(g, 0.5, 0.1), None).unwrap()
}

/// Gram–Schmidt in the grid inner product.
fn orthonormal(g: &Grid<f64>, funcs: Vec<Vec<f64>>) -> DMatrix<f64> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for mut f in funcs {
        for _ in 0..2 {
            for o in &out {
                let c = g.dot(&f, o);
                f.iter_mut().zip(o).for_each(|(a, b)| *a -= c * b);
            }
        }
        let nrm = g.norm(&f);
        f.iter_mut().for_each(|a| *a /= nrm);
        out.push(f);
    }
    let rows = out[0].len();
    DMatrix::from_fn(rows, out.len(), |i, j| out[j][i])
}

/// Smooth periodic bumps `exp(κ (cos 2π(x − c) − 1))`.
fn smooth_modes(g: &Grid<f64>, r: usize) -> DMatrix<f64> {
    let funcs = (0..r)
        .map(|k| {
            let (c, kappa) = (0.3 + 0.1 * k as f64, 1.0 + 0.5 * k as f64);
            g.nodes().iter().map(|x| (kappa * ((2.0 * std::f64::consts::PI * (x - c)).cos() - 1.0)).exp()).collect()
        })
        .collect();
    orthonormal(g, funcs)
}

/// Fine enough that cubic-interpolation error in the Gram blocks stays
/// below 1e-8 for off-lattice shifts.
fn shift_system(kind: ModelKind, r: usize, phase: PhaseCondition) -> RomSystem<f64> {
    shift_system_on(grid(800), kind, r, phase)
}

fn shift_system_on(g: Grid<f64>, kind: ModelKind, r: usize, phase: PhaseCondition) -> RomSystem<f64> {
    let m = model(kind, 1.0, 2e-3, g);
    let fam = TransformFamily::periodic_shift(g).unwrap();
    RomSystem::new(m, vec![(fam, smooth_modes(&g, r))], phase).unwrap()
}

fn random_state(rng: &mut ChaCha8Rng, r: usize, q: usize) -> RomState<f64> {
    RomState::new(
        rng.gen_range(0.0..1.0),
        DVector::from_fn(r, |_, _| rng.gen_range(0.3..1.5) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 }),
        DVector::from_fn(q, |_, _| rng.gen_range(-0.4..0.4)),
    )
}

#[test]
fn orthonormal_modes_have_identity_mass_and_symmetric_blocks() {
    let sys = shift_system(ModelKind::AdvectionDiffusionPeriodic, 3, PhaseCondition::Residual);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10 {
        let p = [rng.gen_range(-1.0..1.0)];
        let mb = sys.assemble_mass_blocks(&p).unwrap();
        assert!((&mb.m_alpha - DMatrix::identity(3, 3)).amax() < 1e-8);
        let full = mb.block_matrix();
        assert!((&full - full.transpose()).amax() < 1e-12);
    }
}

#[test]
fn shortcuts_match_direct_assembly() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for kind in [ModelKind::Advection, ModelKind::AdvectionDiffusionPeriodic, ModelKind::Burgers] {
        // The quadratic term compounds the interpolation error.
        let direct = shift_system_on(grid(1200), kind, 3, PhaseCondition::Residual);
        let fast = direct.clone().with_shortcuts().unwrap();
        for _ in 0..10 {
            let st = random_state(&mut rng, 3, 1);
            let a = direct.assemble_mass_blocks(st.p.as_slice()).unwrap();
            let b = fast.assemble_mass_blocks(st.p.as_slice()).unwrap();
            let full = a.block_matrix();
            assert!((&full - &b.block_matrix()).amax() < 1e-8 * full.amax(), "{kind:?} mass");
            let fa = direct.assemble_rhs(&st).unwrap();
            let fb = fast.assemble_rhs(&st).unwrap();
            let scale = 1.0 + fa.f_alpha.amax().max(fa.f_p.amax());
            assert!((&fa.f_alpha - &fb.f_alpha).amax() < 1e-8 * scale, "{kind:?} f_alpha");
            assert!((&fa.f_p - &fb.f_p).amax() < 1e-8 * scale, "{kind:?} f_p");
        }
    }
}

#[test]
fn shortcuts_need_single_periodic_shift_frame() {
    let g = grid(64);
    let m = model(ModelKind::Advection, 1.0, 0.0, g);
    let sys = RomSystem::new(m, vec![(TransformFamily::identity(g), smooth_modes(&g, 2))], PhaseCondition::Residual).unwrap();
    assert!(matches!(sys.with_shortcuts(), Err(Error::Unsupported(_))));
}

#[test]
fn zero_state_of_burgers_has_zero_rhs() {
    let sys = shift_system(ModelKind::Burgers, 3, PhaseCondition::Residual);
    let st = RomState::new(0.2, DVector::zeros(3), DVector::from_element(1, 0.13));
    let f = sys.assemble_rhs(&st).unwrap();
    assert_eq!(f.f_alpha.amax(), 0.0);
    assert_eq!(f.f_p.amax(), 0.0);
    let zero = sys.residual_norm(&st, &DVector::zeros(3), &DVector::zeros(1)).unwrap();
    assert_eq!(zero, 0.0);
}

#[test]
fn advection_rhs_is_transport_of_the_mass_blocks() {
    let sys = shift_system(ModelKind::Advection, 3, PhaseCondition::Residual);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let st = random_state(&mut rng, 3, 1);
        let mb = sys.assemble_mass_blocks(st.p.as_slice()).unwrap();
        let f = sys.assemble_rhs(&st).unwrap();
        let expected = &mb.n * sys.scaling(&st.alpha) * DVector::from_element(1, 1.0);
        assert!((&f.f_alpha - expected).amax() < 1e-12);
    }
}

#[test]
fn advection_moves_at_unit_speed_with_frozen_coefficients() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for sys in [
        shift_system(ModelKind::Advection, 2, PhaseCondition::Residual),
        shift_system(ModelKind::Advection, 2, PhaseCondition::Residual).with_shortcuts().unwrap(),
    ] {
        for _ in 0..5 {
            let st = random_state(&mut rng, 2, 1);
            let v = sys.rom_velocity(&st).unwrap();
            assert!((v.p_dot[0] - 1.0).abs() < 1e-8, "p_dot {}", v.p_dot[0]);
            assert!(v.alpha_dot.amax() < 1e-8);
            assert!(!v.degenerate);
        }
    }
}

#[test]
fn identity_frame_reduces_to_galerkin_velocity() {
    let g = grid(100);
    let m = model(ModelKind::Burgers, 0.0, 2e-3, g);
    let modes = smooth_modes(&g, 3);
    let sys = RomSystem::new(m.clone(), vec![(TransformFamily::identity(g), modes.clone())], PhaseCondition::Residual).unwrap();
    assert_eq!(sys.path_dim(), 0);
    let alpha = DVector::from_vec(vec![0.4, -0.2, 0.7]);
    let st = RomState::new(0.0, alpha.clone(), DVector::zeros(0));
    let v = sys.rom_velocity(&st).unwrap();
    let z = &modes * &alpha;
    let mut f = vec![0.0; 100];
    m.eval_rhs_into(0.0, z.as_slice(), &mut f).unwrap();
    for i in 0..3 {
        let expected = g.dot(modes.column(i).as_slice(), &f);
        assert!((v.alpha_dot[i] - expected).abs() < 1e-12);
    }
}

#[test]
fn velocity_minimizes_the_residual() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for kind in [ModelKind::AdvectionDiffusionPeriodic, ModelKind::Burgers] {
        let sys = shift_system(kind, 3, PhaseCondition::Residual);
        let st = random_state(&mut rng, 3, 1);
        let v = sys.rom_velocity(&st).unwrap();
        let best = sys.residual_norm(&st, &v.alpha_dot, &v.p_dot).unwrap();
        for _ in 0..100 {
            let mut d = DVector::from_fn(4, |_, _| rng.gen_range(-1.0..1.0));
            d *= 1e-3 / d.norm();
            let a = &v.alpha_dot + d.rows(0, 3);
            let p = &v.p_dot + d.rows(3, 1);
            let other = sys.residual_norm(&st, &a, &p).unwrap();
            assert!(other >= best - 1e-12 * (1.0 + best), "{kind:?}: {other} < {best}");
        }
    }
}

#[test]
fn residual_matches_direct_evaluation() {
    let sys = shift_system(ModelKind::AdvectionDiffusionPeriodic, 2, PhaseCondition::Residual);
    let g = *sys.model().grid();
    let fam = TransformFamily::periodic_shift(g).unwrap();
    let modes = sys.frames()[0].modes().clone();
    let st = RomState::new(0.1, DVector::from_vec(vec![0.8, -0.3]), DVector::from_element(1, 0.237));
    let adot = DVector::from_vec(vec![0.05, 0.2]);
    let pdot = DVector::from_element(1, 0.7);
    let mut lhs = vec![0.0; 800];
    let mut z = vec![0.0; 800];
    for i in 0..2 {
        let psi = fam.apply(0.237, modes.column(i).as_slice()).unwrap();
        let dpsi = fam.derivative(0.237, modes.column(i).as_slice(), sys.model().d1()).unwrap();
        for k in 0..800 {
            lhs[k] += adot[i] * psi[k] + st.alpha[i] * pdot[0] * dpsi[k];
            z[k] += st.alpha[i] * psi[k];
        }
    }
    let mut f = vec![0.0; 800];
    sys.model().eval_rhs_into(0.1, &z, &mut f).unwrap();
    let diff: Vec<f64> = lhs.iter().zip(&f).map(|(a, b)| a - b).collect();
    let direct = g.norm(&diff);
    assert!((sys.residual_norm(&st, &adot, &pdot).unwrap() - direct).abs() < 1e-12);
}

#[test]
fn exact_transport_has_tiny_residual() {
    let g = grid(200);
    let ic = gaussian(g, 0.5, 0.1);
    let m = FomModel::new(ModelKind::Advection, 1.0, 0.0, g, ic.clone(), None).unwrap();
    let nrm = ic.norm();
    let mode = DMatrix::from_column_slice(200, 1, &ic.values().map(|v| v / nrm).as_slice().to_vec());
    let sys = RomSystem::new(m, vec![(TransformFamily::periodic_shift(g).unwrap(), mode)], PhaseCondition::Residual).unwrap();
    let st = RomState::new(0.3, DVector::from_element(1, nrm), DVector::from_element(1, 0.3));
    let res = sys.residual_norm(&st, &DVector::zeros(1), &DVector::from_element(1, 1.0)).unwrap();
    assert!(res <= 1e-6, "{res}");
}

#[test]
fn projection_of_span_member_is_exact() {
    let sys = shift_system(ModelKind::AdvectionDiffusionPeriodic, 3, PhaseCondition::Residual);
    let g = *sys.model().grid();
    let alpha = DVector::from_vec(vec![0.3, -1.2, 0.5]);
    let st = RomState::new(0.0, alpha.clone(), DVector::from_element(1, 0.11));
    let z = sys.reconstruct_state(&st).unwrap();
    let z0 = GridFunction::new(g, 1, z.into()).unwrap();
    let proj = sys.project_initial_condition(&z0, &[0.11]).unwrap();
    assert!(proj.j_iv <= 1e-10, "{}", proj.j_iv);
    assert!((&proj.state.alpha - alpha).amax() < 1e-10);

    let ic = gaussian(g, 0.45, 0.2);
    let at_zero = sys.project_initial_condition(&ic, &[0.0]).unwrap();
    let modes = sys.frames()[0].modes();
    for i in 0..3 {
        assert!((at_zero.state.alpha[i] - g.dot(ic.values().as_slice(), modes.column(i).as_slice())).abs() < 1e-12);
    }
}

#[test]
fn refined_projection_recovers_the_shift() {
    let g = grid(200);
    let ic = gaussian(g, 0.5, 0.1);
    let m = FomModel::new(ModelKind::Advection, 1.0, 0.0, g, ic.clone(), None).unwrap();
    let fam = TransformFamily::periodic_shift(g).unwrap();
    let mode = DMatrix::from_column_slice(200, 1, ic.values().as_slice());
    let sys = RomSystem::new(m, vec![(fam.clone(), mode)], PhaseCondition::Residual).unwrap();
    let target = GridFunction::new(g, 1, fam.apply(0.05, ic.values().as_slice()).unwrap().into()).unwrap();
    let plain = sys.project_initial_condition(&target, &[0.03]).unwrap();
    let refined = sys.project_initial_condition_refined(&target, &[0.03], 20).unwrap();
    assert!(refined.j_iv < 1e-3 * plain.j_iv, "{} vs {}", refined.j_iv, plain.j_iv);
    assert!((refined.state.p[0] - 0.05).abs() < 1e-6);
}

#[test]
fn exact_transport_rom_keeps_coefficient_and_unit_path_speed() {
    let g = grid(200);
    let ic = gaussian(g, 0.5, 0.1);
    let m = FomModel::new(ModelKind::Advection, 1.0, 0.0, g, ic.clone(), None).unwrap();
    let nrm = ic.norm();
    let mode = DMatrix::from_column_slice(200, 1, &ic.values().map(|v| v / nrm).as_slice().to_vec());
    let sys = RomSystem::new(m, vec![(TransformFamily::periodic_shift(g).unwrap(), mode)], PhaseCondition::Residual).unwrap();
    let st0 = sys.project_initial_condition(&ic, &[0.0]).unwrap().state;
    let traj = integrate_rom(&sys, &st0, &IntegratorSpec::trapezoid(0.01), 1.0).unwrap();
    assert_eq!(traj.len(), 101);
    for k in 0..traj.len() {
        assert!((traj.alphas[(0, k)] - nrm).abs() < 1e-6);
        assert!((traj.paths[(0, k)] - traj.times[k]).abs() < 1e-6);
    }
    assert!(traj.residual_norms.iter().all(|r| *r < 1e-6));
}

#[test]
fn phase_defects_satisfy_the_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let sys = shift_system(ModelKind::Burgers, 3, PhaseCondition::Residual);
    for _ in 0..100 {
        let st = random_state(&mut rng, 3, 1);
        let adot = DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0));
        let pdot = DVector::from_fn(1, |_, _| rng.gen_range(-2.0..2.0));
        let d = sys.phase_condition_values(&st, &adot, &pdot).unwrap();
        let gap = (&d.psi_res - (&d.psi_freeze - &d.psi_freeze_reduced)).amax();
        assert!(gap <= 1e-10 * (1.0 + d.psi_res.amax()));
    }
}

#[test]
fn each_phase_solve_zeroes_its_defect() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for phase in [PhaseCondition::Residual, PhaseCondition::Freeze, PhaseCondition::FreezeReduced] {
        let sys = shift_system(ModelKind::AdvectionDiffusionPeriodic, 3, phase);
        let st = random_state(&mut rng, 3, 1);
        let v = sys.rom_velocity(&st).unwrap();
        let d = sys.phase_condition_values(&st, &v.alpha_dot, &v.p_dot).unwrap();
        let defect = match phase {
            PhaseCondition::Residual => d.psi_res,
            PhaseCondition::Freeze => d.psi_freeze,
            PhaseCondition::FreezeReduced => d.psi_freeze_reduced,
        };
        assert!(defect.amax() < 1e-10, "{phase:?}: {}", defect.amax());
    }
}

#[test]
fn freeze_minimizes_residual_plus_reduced_change() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let sys = shift_system(ModelKind::Burgers, 3, PhaseCondition::Freeze);
    let st = random_state(&mut rng, 3, 1);
    let mb = sys.assemble_mass_blocks(st.p.as_slice()).unwrap();
    let rhs = sys.assemble_rhs(&st).unwrap();
    let ch = mb.m_alpha.clone().cholesky().unwrap();
    let d = sys.scaling(&st.alpha);
    let objective = |pdot: &DVector<f64>| {
        let adot = ch.solve(&(&rhs.f_alpha - &mb.n * &d * pdot));
        sys.residual_norm(&st, &adot, pdot).unwrap().powi(2) + adot.dot(&(&mb.m_alpha * &adot))
    };
    let v = sys.rom_velocity(&st).unwrap();
    let best = objective(&v.p_dot);
    for _ in 0..100 {
        let delta = DVector::from_element(1, rng.gen_range(-1e-3..1e-3));
        assert!(objective(&(&v.p_dot + delta)) >= best - 1e-12 * (1.0 + best));
    }
}

#[test]
fn multi_frame_phase_comparison_is_unsupported() {
    let g = grid(64);
    let m = model(ModelKind::Advection, 1.0, 0.0, g);
    let fam = TransformFamily::periodic_shift(g).unwrap();
    let modes = smooth_modes(&g, 2);
    let sys = RomSystem::new(
        m,
        vec![(fam.clone(), modes.columns(0, 1).into_owned()), (fam, modes.columns(1, 1).into_owned())],
        PhaseCondition::Residual,
    )
    .unwrap();
    assert_eq!(sys.path_dim(), 2);
    let st = RomState::new(0.0, DVector::from_element(2, 1.0), DVector::zeros(2));
    let z = DVector::zeros(2);
    assert!(matches!(sys.phase_condition_values(&st, &z, &z), Err(Error::Unsupported(_))));
}

#[test]
fn zero_coefficient_degenerates_the_path_rows() {
    let sys = shift_system(ModelKind::AdvectionDiffusionPeriodic, 2, PhaseCondition::Residual);
    let st = RomState::new(0.0, DVector::zeros(2), DVector::from_element(1, 0.1));
    match sys.rom_velocity(&st) {
        Err(Error::DegenerateMass { p, sigma_min }) => {
            assert_eq!(p, vec![0.1]);
            assert!(sigma_min < 1e-10);
        }
        other => panic!("expected a degenerate-mass error, got {other:?}"),
    }
    let st = RomState::new(0.0, DVector::from_vec(vec![1e-9, 0.0]), DVector::from_element(1, 0.1));
    let reg = sys.with_regularization(Regularization::Fixed(1e-10)).unwrap();
    let v = reg.rom_velocity(&st).unwrap();
    assert!(v.degenerate && v.p_dot[0].is_finite());
}

#[test]
fn degeneracy_during_integration_asks_for_restart() {
    let sys = shift_system(ModelKind::AdvectionDiffusionPeriodic, 2, PhaseCondition::Residual);
    let st = RomState::new(0.0, DVector::zeros(2), DVector::zeros(1));
    let err = integrate_rom(&sys, &st, &IntegratorSpec::trapezoid(0.01), 0.1).unwrap_err();
    assert!(matches!(err, Error::RestartRequired { .. }), "{err}");
}

fn lattice_system(r: usize) -> (RomSystem<f64>, DVector<f64>) {
    let g = grid(100);
    let m = model(ModelKind::AdvectionDiffusionPeriodic, 0.7, 5e-3, g);
    let modes = smooth_modes(&g, r);
    let sys = RomSystem::new(m, vec![(TransformFamily::periodic_shift(g).unwrap(), modes)], PhaseCondition::Residual).unwrap();
    let alpha0 = DVector::from_fn(r, |i, _| 1.0 - 0.3 * i as f64);
    (sys, alpha0)
}

#[test]
fn frozen_model_matches_coefficient_rows_along_the_same_path() {
    let (sys, alpha0) = lattice_system(3);
    // Steps of one cell keep every evaluated shift on the lattice.
    let spec = IntegratorSpec::trapezoid(0.01);
    let path = PrescribedPath::Affine { offset: 0.0, speed: 1.0 };
    let frozen = integrate_frozen_rom(&sys, &alpha0, Some(&path), &spec, 0.5).unwrap();
    let coupled = integrate_rom_along_path(&sys, &alpha0, &[path], &spec, 0.5).unwrap();
    assert!((&frozen.alphas - &coupled.alphas).amax() < 1e-10);
    assert_eq!(frozen.paths, coupled.paths);
}

#[test]
fn frozen_model_with_constant_path_is_galerkin() {
    let (sys, alpha0) = lattice_system(3);
    let spec = IntegratorSpec::trapezoid(0.01);
    let path = PrescribedPath::Affine { offset: 0.0, speed: 0.0 };
    let frozen = integrate_frozen_rom(&sys, &alpha0, Some(&path), &spec, 0.2).unwrap();
    let modes = sys.frames()[0].modes().clone();
    let g = *sys.model().grid();
    let pod = RomSystem::new(sys.model().clone(), vec![(TransformFamily::identity(g), modes)], PhaseCondition::Residual).unwrap();
    let st = RomState::new(0.0, alpha0, DVector::zeros(0));
    let plain = integrate_rom(&pod, &st, &spec, 0.2).unwrap();
    assert!((&frozen.alphas - &plain.alphas).amax() < 1e-10);
}

#[test]
fn frozen_advection_of_back_shifted_modes_is_stationary() {
    let g = grid(200);
    let ic = gaussian(g, 0.5, 0.1);
    let m = FomModel::new(ModelKind::Advection, 1.0, 0.0, g, ic.clone(), None).unwrap();
    let modes = orthonormal(&g, vec![ic.values().as_slice().to_vec(), gaussian(g, 0.4, 0.2).values().as_slice().to_vec()]);
    let sys = RomSystem::new(m, vec![(TransformFamily::periodic_shift(g).unwrap(), modes)], PhaseCondition::Residual).unwrap();
    let alpha0 = DVector::from_vec(vec![0.9, 0.4]);
    let path = PrescribedPath::Affine { offset: 0.0, speed: 1.0 };
    let traj = integrate_frozen_rom(&sys, &alpha0, Some(&path), &IntegratorSpec::trapezoid(0.005), 0.6).unwrap();
    for k in 0..traj.len() {
        assert!((traj.alphas.column(k) - &alpha0).amax() < 1e-8);
    }
}

#[test]
fn sampled_path_derivative_uses_central_differences() {
    let times: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
    let values: Vec<f64> = times.iter().map(|t| t * t).collect();
    let p = PrescribedPath::sampled(times, values).unwrap();
    assert!((p.derivative(0.5) - 1.0).abs() < 1e-12);
    assert!((p.value(0.55) - 0.305).abs() < 1e-12);
    assert!((p.derivative(0.55) - 1.1).abs() < 1e-12);
    assert!(PrescribedPath::sampled(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
}

/// `M α̇ = Φᵀ W F(Φ α)` written out directly.
struct DirectGalerkin {
    model: FomModel<f64>,
    modes: DMatrix<f64>,
}

impl OdeSystem<f64> for DirectGalerkin {
    fn dim(&self) -> usize {
        self.modes.ncols()
    }

    fn rhs(&self, t: f64, y: &[f64], out: &mut [f64]) -> crate::Result<()> {
        let g = *self.model.grid();
        let r = self.modes.ncols();
        let cols: Vec<&[f64]> = (0..r).map(|i| self.modes.column(i).data.into_slice()).collect();
        let mut z = vec![0.0; self.model.dim()];
        for (a, c) in y.iter().zip(&cols) {
            for (zk, v) in z.iter_mut().zip(c.iter()) {
                *zk += a * v;
            }
        }
        let mut f = vec![0.0; z.len()];
        self.model.eval_rhs_into(t, &z, &mut f)?;
        let mut mass = DMatrix::zeros(r, r);
        for i in 0..r {
            for j in i..r {
                mass[(i, j)] = g.dot(cols[i], cols[j]);
                mass[(j, i)] = mass[(i, j)];
            }
        }
        let b = DVector::from_fn(r, |i, _| g.dot(cols[i], &f));
        out.copy_from_slice(mass.cholesky().unwrap().solve(&b).as_slice());
        Ok(())
    }
}

#[test]
fn identity_frames_reproduce_plain_galerkin_bit_for_bit() {
    let g = grid(100);
    let m = model(ModelKind::Burgers, 0.0, 5e-3, g);
    let modes = smooth_modes(&g, 4);
    let sys = RomSystem::new(m.clone(), vec![(TransformFamily::identity(g), modes.clone())], PhaseCondition::Residual).unwrap();
    let alpha0 = DVector::from_vec(vec![0.5, 0.2, -0.1, 0.3]);
    let spec = IntegratorSpec::trapezoid(0.02);
    let traj = integrate_rom(&sys, &RomState::new(0.0, alpha0.clone(), DVector::zeros(0)), &spec, 0.4).unwrap();
    let direct = crate::fom::integrate(&DirectGalerkin { model: m, modes }, alpha0.as_slice(), &spec, 0.4, crate::fom::Sampling::Uniform).unwrap();
    for (k, s) in direct.states.iter().enumerate() {
        assert_eq!(traj.alphas.column(k).as_slice(), s.as_slice());
    }
}

#[test]
fn trajectory_csv_has_named_columns() {
    let (sys, alpha0) = lattice_system(2);
    let st = RomState::new(0.0, alpha0, DVector::zeros(1));
    let traj = integrate_rom(&sys, &st, &IntegratorSpec::trapezoid(0.05), 0.1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("traj.csv");
    traj.write_csv(&file, ",").unwrap();
    let text = std::fs::read_to_string(&file).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,alpha_1,alpha_2,p_1,residual_norm");
    assert_eq!(lines.count(), 3);
}
