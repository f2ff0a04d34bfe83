use nhframes::chaplygin::*;
use nhframes::linalg::{Mat3, Vec3};
use nhframes::ode::{drift, integrate, IntegratorConfig};
use nhframes::so3::{exp_so3, project_to_so3};
use nhframes::DiffEngine;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const AD: DiffEngine = DiffEngine::Ad;

fn v(a: [f64; 3]) -> Vec3<f64> {
    Vec3::from_f64(a)
}

fn body() -> BodyParams {
    BodyParams::new([1.0, 2.0, 3.0], 1.0, 1.0)
}

fn cfg(dt: f64, t_end: f64) -> IntegratorConfig {
    IntegratorConfig {
        dt,
        t_end,
        ..Default::default()
    }
}

fn random_unit(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let g: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let n = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
        if n > 0.1 && n <= 1.0 {
            return [g[0] / n, g[1] / n, g[2] / n];
        }
    }
}

fn random_state(system: System, p: &BodyParams, rng: &mut ChaCha8Rng) -> LGammaState {
    let g = random_unit(rng);
    let w = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
    constrained_state(system, p, g, w)
}

#[test]
fn veselova_multiplier_oracles() {
    let p = body();
    let st = LGammaState::new([1.0, 1.0, 0.0], [0.0, 0.0, 1.0]);
    assert!((veselova_multiplier(&p, &st).unwrap() - 0.5).abs() < 1e-15);
    let st = LGammaState::new([1.0, 0.0, 0.0], [0.0, 0.0, 1.0]);
    assert_eq!(veselova_multiplier(&p, &st).unwrap(), 0.0);
    let sph = BodyParams::new([2.0; 3], 0.0, 0.0);
    let st = LGammaState::new([0.3, -0.4, 0.0], [0.0, 0.0, 1.0]);
    assert_eq!(veselova_multiplier(&sph, &st).unwrap(), 0.0);
    let (ld, _) = veselova_rhs(&sph, st.l, st.gamma);
    assert!(ld.norm() < 1e-15);
}

#[test]
fn veselova_multiplier_rejects_unconstrained_states() {
    let st = LGammaState::new([0.0, 0.0, 1.0], [0.0, 0.0, 1.0]);
    let e = veselova_multiplier(&body(), &st);
    assert!(matches!(e, Err(nhframes::Error::Constraint { .. })));
    assert!(checked_rhs(System::Rubber, &body(), &st).is_err());
    let off_sphere = LGammaState::new([1.0, 0.0, 0.0], [0.0, 0.0, 1.1]);
    assert!(checked_rhs(System::Marble, &body(), &off_sphere).is_err());
}

#[test]
fn marble_maps_oracle() {
    let p = body();
    let l = marble_l_of_omega(&p, v([0.0, 0.0, 1.0]), v([0.0, 0.0, 1.0]));
    assert!(l.sub(v([0.0, 0.0, 3.0])).norm() < 1e-15);
    let om = marble_omega_of_l(&p, v([0.0, 0.0, 1.0]), l);
    assert!(om.sub(v([0.0, 0.0, 1.0])).norm() < 1e-15);
    let free = BodyParams::new([1.0, 2.0, 3.0], 0.0, 1.0);
    let g = v([0.6, 0.0, 0.8]);
    let w = v([0.1, -0.2, 0.3]);
    assert!(marble_l_of_omega(&free, g, w).sub(v([0.1, -0.4, 0.9])).norm() < 1e-15);
}

#[test]
fn marble_maps_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let p = body();
    for _ in 0..1000 {
        let g = v(random_unit(&mut rng));
        let w = v([rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]);
        let back = marble_omega_of_l(&p, g, marble_l_of_omega(&p, g, w));
        assert!(back.sub(w).norm() < 1e-12);
    }
}

#[test]
fn density_oracles() {
    let p = body();
    let k = v([0.0, 0.0, 1.0]);
    assert!((measure_density(System::Veselova, &p, k) - 3f64.sqrt()).abs() < 1e-14);
    assert!((measure_density(System::Marble, &p, k) - (0.75f64).powf(-0.5)).abs() < 1e-14);
    assert!((measure_density(System::Marble, &p, k) - 1.15470).abs() < 1e-5);
    let free = BodyParams::new([1.0, 2.0, 3.0], 0.0, 0.0);
    assert_eq!(measure_density(System::Marble, &free, v([0.6, 0.0, 0.8])), 1.0);
}

#[test]
fn rubber_density_is_the_compressed_legendre_determinant() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = BodyParams::new([1.0, 2.0, 3.0], 0.7, 1.3);
    for _ in 0..100 {
        let g = v(random_unit(&mut rng));
        let det = compressed_legendre_det(&p, g, true);
        let f = measure_density(System::Rubber, &p, g);
        assert!((f.powi(-2) - det).abs() < 1e-12 * det);
        assert!(veselova_legendre_consistency(&p, g) < 1e-12);
    }
}

#[test]
fn densities_make_the_flows_divergence_free() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let p = body();
    for system in [System::Veselova, System::Marble, System::Rubber] {
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let st = random_state(system, &p, &mut rng);
            worst = worst.max(measure_invariance_residual(AD, system, &p, &st, false).abs());
        }
        assert!(worst < 1e-9, "{system:?}: {worst:e}");
    }
}

#[test]
fn veselova_extensions_agree_on_the_constraint_surface() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let p = body();
    for _ in 0..100 {
        let st = random_state(System::Veselova, &p, &mut rng);
        let (l1, g1) = veselova_rhs(&p, st.l, st.gamma);
        let (l2, g2) = veselova_rhs_extended(&p, st.l, st.gamma);
        assert!(l1.sub(l2).norm() < 1e-13 && g1.sub(g2).norm() == 0.0);
    }
}

#[test]
fn marble_without_density_is_not_volume_preserving() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let p = body();
    let mut min: f64 = f64::INFINITY;
    for _ in 0..100 {
        let st = random_state(System::Marble, &p, &mut rng);
        min = min.min(measure_invariance_residual(AD, System::Marble, &p, &st, true).abs());
    }
    // generic states: the median is far above the threshold
    let st = LGammaState::new([0.4, -0.7, 0.9], [0.6, 0.0, 0.8]);
    assert!(measure_invariance_residual(AD, System::Marble, &p, &st, true).abs() > 1e-3);
    assert!(min.is_finite());
}

#[test]
fn veselova_conserves_its_integrals() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let p = body();
    let flow = ChaplyginFlow { system: System::Veselova, p };
    for _ in 0..10 {
        let st = random_state(System::Veselova, &p, &mut rng);
        let traj = integrate(&flow, &st.to_vec(), &cfg(1e-3, 10.0)).unwrap();
        let at = |y: &[f64]| LGammaState::from_slice(y);
        let d = [
            drift(&traj, |y| energy(System::Veselova, &p, &at(y))),
            drift(&traj, |y| veselova_quartic(&at(y))),
            drift(&traj, |y| at(y).gamma.norm2()),
            drift(&traj, |y| constraint(System::Veselova, &p, &at(y)).unwrap()),
        ];
        assert!(d.iter().all(|&x| x < 1e-8), "{d:?}");
    }
}

#[test]
fn marble_and_rubber_conserve_their_integrals() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = body();
    for system in [System::Marble, System::Rubber] {
        let flow = ChaplyginFlow { system, p };
        for _ in 0..3 {
            let st = random_state(system, &p, &mut rng);
            let traj = integrate(&flow, &st.to_vec(), &cfg(1e-3, 10.0)).unwrap();
            for (name, _) in integrals(system, &p, &st) {
                let d = drift(&traj, |y| {
                    let s = LGammaState::from_slice(y);
                    integrals(system, &p, &s).into_iter().find(|(n, _)| *n == name).unwrap().1
                });
                assert!(d < 1e-8, "{system:?} {name}: {d:e}");
            }
        }
    }
}

#[test]
fn homogeneous_ball_spins_at_constant_spatial_rate() {
    let p = BodyParams::new([2.0; 3], 1.0, 0.5);
    let rec = MarbleReconstruction { p };
    let r0 = exp_so3(v([0.3, -0.2, 0.5]));
    let l0 = marble_l_of_omega(&p, r0.row(2), v([0.4, 1.0, -0.3]));
    let st = ReconstructionState { l: l0, r: r0, z: [0.0, 0.0] };
    let traj = integrate(&rec, &st.to_vec(), &cfg(1e-3, 5.0)).unwrap();
    let w0 = rec.omega_space(&st);
    for y in &traj.y {
        let s = ReconstructionState::from_slice(y);
        assert!(rec.omega_space(&s).sub(w0).norm() < 1e-9);
    }
    let pts: Vec<[f64; 2]> = traj.y.iter().map(|y| [y[12], y[13]]).collect();
    assert!(nhframes::geodesic::collinearity_residual(&pts) < 1e-8);
}

#[test]
fn rubber_reduces_to_veselova_at_zero_radius() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let p = BodyParams::new([1.0, 2.0, 3.0], 1.0, 0.0);
    for _ in 0..200 {
        let st = random_state(System::Veselova, &p, &mut rng);
        let a = rubber_lambda(&p, st.l, st.gamma);
        let b = veselova_multiplier(&p, &st).unwrap();
        assert!((a - b).abs() < 1e-10);
        let (l1, g1) = rubber_rhs(&p, st.l, st.gamma);
        let (l2, g2) = veselova_rhs(&p, st.l, st.gamma);
        assert!(l1.sub(l2).norm() < 1e-10 && g1.sub(g2).norm() < 1e-10);
    }
}

fn marble_reconstruction(p: BodyParams, omega0: [f64; 3], t_end: f64, dt: f64) -> nhframes::ode::Trajectory {
    let r0 = exp_so3(v([0.4, 0.1, -0.2]));
    let l0 = marble_l_of_omega(&p, r0.row(2), v(omega0));
    let st = ReconstructionState { l: l0, r: r0, z: [0.0, 0.0] };
    integrate(&MarbleReconstruction { p }, &st.to_vec(), &cfg(dt, t_end)).unwrap()
}

#[test]
fn phase_drift_identity_holds_pointwise() {
    let p = body();
    let traj = marble_reconstruction(p, [0.7, -0.3, 0.5], 10.0, 1e-3);
    let rep = reconstruct_and_phase_drift(&p, &traj).unwrap();
    assert!(rep.identity_residual < 1e-8, "{:e}", rep.identity_residual);
    assert!(rep.ell_drift < 1e-9, "{:e}", rep.ell_drift);
}

#[test]
fn homogeneous_contact_path_is_a_line() {
    let p = BodyParams::new([2.0; 3], 1.0, 1.0);
    let traj = marble_reconstruction(p, [0.7, -0.3, 0.5], 10.0, 1e-3);
    let pts: Vec<[f64; 2]> = traj.y.iter().map(|y| [y[12], y[13]]).collect();
    assert!(nhframes::geodesic::collinearity_residual(&pts) < 1e-8);
    let rep = reconstruct_and_phase_drift(&p, &traj).unwrap();
    assert!(rep.identity_residual < 1e-8);
}

#[test]
fn swaying_has_zero_average() {
    let p = body();
    let traj = marble_reconstruction(p, [0.7, -0.3, 0.5], 1000.0, 1e-2);
    let rep = reconstruct_and_phase_drift(&p, &traj).unwrap();
    assert!(rep.sway_amplitude > 0.1);
    assert!(rep.sway_mean.abs() < 1e-3 * rep.sway_amplitude, "{} vs {}", rep.sway_mean, rep.sway_amplitude);
    assert!(rep.mean_drift_rate > 0.0);
}

#[test]
fn vertical_momentum_is_flagged() {
    let p = body();
    let st = ReconstructionState { l: v([0.0, 0.0, 1.0]), r: Mat3::identity(), z: [0.0, 0.0] };
    let traj = integrate(&MarbleReconstruction { p }, &st.to_vec(), &cfg(1e-2, 0.1)).unwrap();
    assert!(reconstruct_and_phase_drift(&p, &traj).is_err());
}

#[test]
fn reduced_a_form_reproduces_the_l_gamma_flow() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let p = body();
    for _ in 0..3 {
        let st = random_state(System::Marble, &p, &mut rng);
        let l3 = st.l.dot(st.gamma);
        let a0 = st.gamma.cross(st.l);
        let red = ReducedMarble { p, l3 };
        let c = cfg(1e-3, 5.0);
        let ta = integrate(&red, &[a0.values(), st.gamma.values()].concat(), &c).unwrap();
        let tl = integrate(&ChaplyginFlow { system: System::Marble, p }, &st.to_vec(), &c).unwrap();
        for (ya, yl) in ta.y.iter().zip(&tl.y) {
            let l = red.l_of(Vec3::from_slice(&ya[0..3]), Vec3::from_slice(&ya[3..6]));
            assert!(l.sub(Vec3::from_slice(&yl[0..3])).norm() < 1e-6);
        }
    }
}

#[test]
fn homogeneous_a_form_is_an_isotropic_oscillator() {
    let p = BodyParams::new([2.0; 3], 1.0, 0.8);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let g = v(random_unit(&mut rng));
        let a = g.cross(v([rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]));
        let l3 = rng.gen_range(-1.0..1.0);
        let red = ReducedMarble { p, l3 };
        let y = [a.values(), g.values()].concat();
        let full = nhframes::ode::OdeSystem::rhs(&red, 0.0, &y).unwrap();
        let closed = homogeneous_a_rhs(&p, l3, a, g);
        assert!(Vec3::from_slice(&full[0..3]).sub(closed).norm() < 1e-12);
    }
    let red = ReducedMarble { p, l3: 0.3 };
    let g0 = v([0.0, 0.6, 0.8]);
    let a0 = g0.cross(v([1.0, 0.2, 0.0]));
    let traj = integrate(&red, &[a0.values(), g0.values()].concat(), &cfg(1e-3, 5.0)).unwrap();
    let a2 = |y: &[f64]| y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
    let ag = |y: &[f64]| y[0] * y[3] + y[1] * y[4] + y[2] * y[5];
    assert!(drift(&traj, a2) < 1e-10);
    assert!(traj.y.iter().all(|y| ag(y).abs() < 1e-10));
}

#[test]
fn reconstruction_keeps_rotations_orthogonal() {
    let traj = marble_reconstruction(body(), [0.2, 0.9, -0.4], 5.0, 1e-2);
    for y in &traj.y {
        let r = ReconstructionState::from_slice(y).r;
        let p = project_to_so3(&r);
        let d: f64 = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| (r.m[i][j] - p.m[i][j]).abs()).fold(0.0, f64::max);
        assert!(d < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn veselova_keeps_the_constraint_tangent(
        g in prop::array::uniform3(-1.0f64..1.0),
        w in prop::array::uniform3(-2.0f64..2.0),
    ) {
        prop_assume!(g.iter().map(|x| x * x).sum::<f64>() > 0.05);
        let p = body();
        let st = constrained_state(System::Veselova, &p, g, w);
        let (ld, gd) = veselova_rhs(&p, st.l, st.gamma);
        let ai = p.a_inv::<f64>();
        let rate = ai.mul_vec(ld).dot(st.gamma) + ai.mul_vec(st.l).dot(gd);
        prop_assert!(rate.abs() < 1e-12);
        // G is conserved since d/dt (L, γ) = λ
        let lambda = veselova_lambda(&p, st.l, st.gamma);
        let g_rate = 2.0 * st.l.dot(ld) - 2.0 * st.l.dot(st.gamma) * (ld.dot(st.gamma) + st.l.dot(gd));
        prop_assert!(g_rate.abs() < 1e-11 * (1.0 + lambda.abs()));
    }

    #[test]
    fn rubber_multiplier_preserves_the_constraint(
        g in prop::array::uniform3(-1.0f64..1.0),
        w in prop::array::uniform3(-2.0f64..2.0),
        mr in 0.0f64..2.0,
    ) {
        prop_assume!(g.iter().map(|x| x * x).sum::<f64>() > 0.05);
        let p = BodyParams::new([1.0, 2.0, 3.0], 1.0, mr);
        let st = constrained_state(System::Rubber, &p, g, w);
        let (ld, gd) = rubber_rhs(&p, st.l, st.gamma);
        // directional derivative of (Ω(L, γ), γ) along the field
        let h = 1e-6;
        let c = |t: f64| {
            let l = st.l.add(ld.scale(t));
            let g = st.gamma.add(gd.scale(t));
            marble_omega_of_l(&p, g, l).dot(g)
        };
        prop_assert!(((c(h) - c(-h)) / (2.0 * h)).abs() < 1e-7);
    }
}
