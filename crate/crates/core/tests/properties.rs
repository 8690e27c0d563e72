//! Property tests over randomly drawn fields, shifts, states and bases.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use tramor::analysis::{error_bound, reconstruct_decomposition, BoundParams};
use tramor::fom::{integrate_fom, relative_error, FomModel, IntegratorSpec, ModelKind, SnapshotSet};
use tramor::numerics::{DiffOp, DiffOrder, Grid, GridFunction, TransformFamily};
use tramor::offline::{compute_pod, compute_spod_single_frame};
use tramor::rom::{PhaseCondition, RomState, RomSystem};

fn periodic(n: usize) -> Grid<f64> {
    Grid::periodic(n, 0.0, 1.0).unwrap()
}

/// Periodic Gaussian, distance measured around the circle.
fn bump(g: &Grid<f64>, center: f64, width: f64) -> Vec<f64> {
    g.nodes()
        .iter()
        .map(|x| {
            let d = (x - center).rem_euclid(1.0);
            let d = d.min(1.0 - d);
            (-(d / width).powi(2)).exp()
        })
        .collect()
}

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
    DMatrix::from_fn(out[0].len(), out.len(), |i, j| out[j][i])
}

fn smooth_modes(g: &Grid<f64>, r: usize) -> DMatrix<f64> {
    let funcs = (0..r)
        .map(|k| {
            let (c, kappa) = (0.3 + 0.1 * k as f64, 1.0 + 0.5 * k as f64);
            g.nodes().iter().map(|x| (kappa * ((2.0 * std::f64::consts::PI * (x - c)).cos() - 1.0)).exp()).collect()
        })
        .collect();
    orthonormal(g, funcs)
}

fn shift_rom(kind: ModelKind, n: usize, r: usize) -> RomSystem<f64> {
    let g = periodic(n);
    let ic = GridFunction::from_fn(g, |x: f64| (-((x - 0.5) / 0.1).powi(2)).exp());
    let m = FomModel::new(kind, 0.8, 3e-3, g, ic, None).unwrap();
    RomSystem::new(m, vec![(TransformFamily::periodic_shift(g).unwrap(), smooth_modes(&g, r))], PhaseCondition::Residual).unwrap()
}

fn snapshots_of(g: Grid<f64>, fields: &[Vec<f64>]) -> SnapshotSet<f64> {
    let times = (0..fields.len()).map(|k| k as f64 * 0.05).collect();
    SnapshotSet::from_states(g, 1, times, fields, "random").unwrap()
}

fn random_fields(n: usize, m: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1.0f64..1.0, n), m)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn shift_is_nearly_isometric(center in 0.0f64..1.0, width_cells in 5.0f64..40.0, eta in -2.0f64..2.0) {
        let g = periodic(200);
        let phi = bump(&g, center, width_cells * g.dxi());
        let fam = TransformFamily::periodic_shift(g).unwrap();
        let shifted = fam.apply(eta, &phi).unwrap();
        let (a, b) = (g.dot(&shifted, &shifted), g.dot(&phi, &phi));
        prop_assert!((a - b).abs() <= 1e-3 * b);
    }

    #[test]
    fn lattice_shifts_permute_values(k in -400i64..400, center in 0.0f64..1.0) {
        let g = periodic(200);
        let phi = bump(&g, center, 0.07);
        let fam = TransformFamily::periodic_shift(g).unwrap();
        let shifted = fam.apply(k as f64 * g.dxi(), &phi).unwrap();
        for (i, v) in shifted.iter().enumerate() {
            let src = (i as i64 - k).rem_euclid(200) as usize;
            prop_assert_eq!(*v, phi[src]);
        }
        let mut sorted_a = shifted.clone();
        let mut sorted_b = phi.clone();
        sorted_a.sort_by(f64::total_cmp);
        sorted_b.sort_by(f64::total_cmp);
        prop_assert_eq!(sorted_a, sorted_b);
    }

    #[test]
    fn lattice_group_action_and_identity(a in -300i64..300, b in -300i64..300, center in 0.0f64..1.0) {
        let g = periodic(150);
        let phi = bump(&g, center, 0.05);
        let fam = TransformFamily::periodic_shift(g).unwrap();
        prop_assert_eq!(fam.apply(0.0, &phi).unwrap(), phi.clone());
        let h = g.dxi();
        let two_steps = fam.apply(b as f64 * h, &fam.apply(a as f64 * h, &phi).unwrap()).unwrap();
        let one_step = fam.apply((a + b) as f64 * h, &phi).unwrap();
        prop_assert_eq!(two_steps, one_step);
    }

    #[test]
    fn first_derivative_is_antisymmetric(u in prop::collection::vec(-1.0f64..1.0, 64), v in prop::collection::vec(-1.0f64..1.0, 64)) {
        let g = periodic(64);
        let d1 = DiffOp::new(DiffOrder::D1Sixth, g).unwrap();
        let lhs = g.dot(&d1.apply(&u), &v);
        let rhs = -g.dot(&u, &d1.apply(&v));
        let scale = g.norm(&u) * g.norm(&v) / g.dxi();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn error_bound_is_non_decreasing(
        j_iv in 0.0f64..1.0,
        residuals in prop::collection::vec(0.0f64..5.0, 2..60),
        c_tilde in 1.0f64..4.0,
        omega in 0.0f64..3.0,
    ) {
        let times: Vec<f64> = (0..residuals.len()).map(|k| k as f64 * 0.02).collect();
        let b = error_bound(j_iv, &residuals, &times, BoundParams { c_tilde, omega }).unwrap();
        prop_assert_eq!(b.len(), times.len());
        for w in b.windows(2) {
            prop_assert!(w[1] >= w[0]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn pod_bookkeeping_and_normalization(fields in random_fields(40, 12), r in 1usize..6) {
        let g = periodic(40);
        let s = snapshots_of(g, &fields);
        let dec = compute_pod(&s, r).unwrap();
        let rec = reconstruct_decomposition(&dec).unwrap();
        prop_assert!((relative_error(&s, &rec).unwrap() - dec.offline_error()).abs() <= 1e-12);
        for i in 0..r {
            prop_assert!((dec.frames()[0].mode(i).norm() - 1.0).abs() < 1e-12);
        }
        let same = compute_spod_single_frame(&s, &vec![0.0; s.len()], &TransformFamily::identity(g), r).unwrap();
        prop_assert_eq!(same.frames()[0].modes(), dec.frames()[0].modes());
        prop_assert_eq!(same.offline_error(), dec.offline_error());
    }

    #[test]
    fn pod_beats_random_bases(fields in random_fields(30, 10), r in 1usize..5, seeds in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 30 * 4), 20)) {
        let g = periodic(30);
        let s = snapshots_of(g, &fields);
        let pod_err = compute_pod(&s, r).unwrap().offline_error();
        for seed in seeds {
            let funcs: Vec<Vec<f64>> = (0..r).map(|j| seed[j * 30..(j + 1) * 30].to_vec()).collect();
            let basis = orthonormal(&g, funcs);
            let projected: Vec<Vec<f64>> = fields
                .iter()
                .map(|z| {
                    let mut out = vec![0.0; 30];
                    for j in 0..r {
                        let c = g.dot(basis.column(j).as_slice(), z);
                        out.iter_mut().zip(basis.column(j).iter()).for_each(|(o, b)| *o += c * b);
                    }
                    out
                })
                .collect();
            let competitor = relative_error(&s, &snapshots_of(g, &projected)).unwrap();
            prop_assert!(pod_err <= competitor + 1e-12);
        }
    }

    #[test]
    fn periodic_advection_diffusion_conserves_mean(center in 0.2f64..0.8, c in -2.0f64..2.0, mu in 0.0f64..5e-3) {
        let g = periodic(80);
        let ic = GridFunction::from_fn(g, move |x: f64| (-((x - center) / 0.1).powi(2)).exp());
        let m = FomModel::new(ModelKind::AdvectionDiffusionPeriodic, c, mu, g, ic, None).unwrap();
        let s = integrate_fom(&m, &IntegratorSpec::trapezoid(0.01), 0.5).unwrap();
        let one = vec![1.0; 80];
        let m0 = g.dot(s.column(0), &one);
        for k in 0..s.len() {
            prop_assert!((g.dot(s.column(k), &one) - m0).abs() <= 1e-10);
        }
    }
}

fn state_strategy(r: usize, q: usize) -> impl Strategy<Value = RomState<f64>> {
    let sign = prop::bool::ANY.prop_map(|b| if b { 1.0 } else { -1.0 });
    (
        0.0f64..1.0,
        prop::collection::vec((0.3f64..1.5, sign), r),
        prop::collection::vec(-0.4f64..0.4, q),
    )
        .prop_map(|(t, a, p)| RomState::new(t, DVector::from_iterator(a.len(), a.into_iter().map(|(m, s)| m * s)), DVector::from_vec(p)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn block_mass_matrix_is_symmetric(p in -3.0f64..3.0) {
        let sys = shift_rom(ModelKind::AdvectionDiffusionPeriodic, 200, 3);
        let full = sys.assemble_mass_blocks(&[p]).unwrap().block_matrix();
        prop_assert!((&full - full.transpose()).amax() <= 1e-12);
    }

    #[test]
    fn phase_defects_satisfy_the_identity(
        st in state_strategy(3, 1),
        adot in prop::collection::vec(-2.0f64..2.0, 3),
        pdot in -2.0f64..2.0,
    ) {
        let sys = shift_rom(ModelKind::Burgers, 200, 3);
        let d = sys.phase_condition_values(&st, &DVector::from_vec(adot), &DVector::from_element(1, pdot)).unwrap();
        let gap = &d.psi_res - (&d.psi_freeze - &d.psi_freeze_reduced);
        prop_assert!(gap.amax() <= 1e-10);
    }

    #[test]
    fn rom_velocity_minimizes_the_residual(st in state_strategy(2, 1), dirs in prop::collection::vec(-1.0f64..1.0, 3), scale in 1e-4f64..1e-1) {
        let sys = shift_rom(ModelKind::AdvectionDiffusionPeriodic, 200, 2);
        let v = sys.rom_velocity(&st).unwrap();
        let best = sys.residual_norm(&st, &v.alpha_dot, &v.p_dot).unwrap();
        let adot = &v.alpha_dot + DVector::from_vec(dirs[..2].to_vec()) * scale;
        let pdot = &v.p_dot + DVector::from_element(1, dirs[2] * scale);
        let other = sys.residual_norm(&st, &adot, &pdot).unwrap();
        prop_assert!(other >= best * (1.0 - 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn precomputed_operators_match_full_space(st in state_strategy(3, 1), kind in prop::sample::select(vec![ModelKind::Advection, ModelKind::AdvectionDiffusionPeriodic, ModelKind::Burgers])) {
        let direct = shift_rom(kind, 1200, 3);
        let fast = direct.clone().with_shortcuts().unwrap();
        let (a, b) = (direct.assemble_rhs(&st).unwrap(), fast.assemble_rhs(&st).unwrap());
        let scale = a.f_alpha.amax().max(a.f_p.amax()).max(1.0);
        prop_assert!((&a.f_alpha - &b.f_alpha).amax() <= 1e-8 * scale);
        prop_assert!((&a.f_p - &b.f_p).amax() <= 1e-8 * scale);
        let (ma, mb) = (direct.assemble_mass_blocks(st.p.as_slice()).unwrap(), fast.assemble_mass_blocks(st.p.as_slice()).unwrap());
        let mscale = ma.block_matrix().amax();
        prop_assert!((ma.block_matrix() - mb.block_matrix()).amax() <= 1e-8 * mscale);
    }
}
