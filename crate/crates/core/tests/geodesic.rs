use nhframes::cartan::{ConformallyScaled, EngelFlat, Integrable, Penny, PennyParams};
use nhframes::geodesic::{collinearity_residual, integrate_geodesic, nh_geodesic_rhs};
use nhframes::ode::{IntegratorConfig, Method};
use nhframes::DiffEngine;
use proptest::prelude::*;

const AD: DiffEngine = DiffEngine::Ad;

fn cfg(dt: f64, t_end: f64) -> IntegratorConfig {
    IntegratorConfig {
        dt,
        t_end,
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn penny_quasivelocities_are_first_integrals(
        q in prop::array::uniform4(-3.0f64..3.0),
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
    ) {
        let penny = Penny::new(PennyParams { m: 1.7, a: 0.6, i: 0.9, j: 1.3 });
        let (_, vdot) = nh_geodesic_rhs(AD, &penny, &q, &[a, b]).unwrap();
        prop_assert!(vdot[0].abs() < 1e-14 && vdot[1].abs() < 1e-14);
    }
}

#[test]
fn zero_velocity_is_stationary() {
    let (traj, _) = integrate_geodesic(AD, &EngelFlat, &[0.1, 0.2, 0.3, 0.4], &[0.0, 0.0], &cfg(0.01, 1.0)).unwrap();
    assert_eq!(traj.y[0], *traj.y.last().unwrap());
}

#[test]
fn integrable_flat_case_gives_straight_lines() {
    let (traj, _) = integrate_geodesic(AD, &Integrable, &[0.0; 4], &[0.3, -0.7], &cfg(0.01, 2.0)).unwrap();
    let end = traj.last();
    assert!((end[0] - 0.6).abs() < 1e-14 && (end[1] + 1.4).abs() < 1e-14);
    assert_eq!((end[2], end[3]), (0.0, 0.0));
}

#[test]
fn penny_contact_point_closes_a_circle() {
    let p = PennyParams::default();
    let penny = Penny::new(p);
    let (a, b) = (1.0, 0.5);
    // θ̇ = b/√(J/2), one full turn of the heading
    let period = 2.0 * std::f64::consts::PI * p.k_spin() / b;
    let (traj, summary) = integrate_geodesic(AD, &penny, &[0.3, -0.2, 0.4, 0.0], &[a, b], &cfg(1e-3, period)).unwrap();
    let (s, e) = (&traj.y[0], traj.last());
    assert!((e[2] - s[2] - 2.0 * std::f64::consts::PI).abs() < 1e-9);
    assert!((e[0] - s[0]).hypot(e[1] - s[1]) < 1e-6);
    // radius aφ̇/θ̇
    let radius = p.a * (a / p.k_roll()) / (b / p.k_spin());
    let far = traj.y.iter().map(|y| (y[0] - s[0]).hypot(y[1] - s[1])).fold(0.0, f64::max);
    assert!((far - 2.0 * radius).abs() < 1e-3);
    assert!(summary.quasivelocity_drift.iter().all(|&d| d < 1e-9));
}

#[test]
fn penny_without_spin_rolls_along_a_line() {
    let (traj, _) = integrate_geodesic(AD, &Penny::new(PennyParams::default()), &[0.0, 0.0, 0.7, 0.0], &[1.2, 0.0], &cfg(1e-3, 10.0)).unwrap();
    let pts: Vec<[f64; 2]> = traj.y.iter().map(|y| [y[0], y[1]]).collect();
    assert!(collinearity_residual(&pts) < 1e-8);
    assert!(pts.last().unwrap()[0].hypot(pts.last().unwrap()[1]) > 1.0);
}

#[test]
fn energy_drift_is_small() {
    let q = [0.2, -0.3, 0.1, 0.5];
    let v = [0.8, -0.6];
    let c = cfg(1e-3, 10.0);
    let (_, s1) = integrate_geodesic(AD, &Penny::new(PennyParams::default()), &q, &v, &c).unwrap();
    let (_, s2) = integrate_geodesic(AD, &EngelFlat, &q, &v, &c).unwrap();
    let perturbed = ConformallyScaled::perturbed(Penny::new(PennyParams::default()), 0.1);
    let (_, s3) = integrate_geodesic(AD, &perturbed, &q, &v, &c).unwrap();
    for s in [s1, s2, s3] {
        assert!(s.energy_drift < 1e-9, "{}", s.energy_drift);
    }
}

#[test]
fn energy_drift_scales_with_fourth_power_of_step() {
    let q = [0.0, 0.5, -0.5, 0.5];
    let v = [1.5, -1.0];
    let s = ConformallyScaled::perturbed(Penny::new(PennyParams::default()), 0.5);
    let drift = |dt: f64| integrate_geodesic(AD, &s, &q, &v, &cfg(dt, 4.0)).unwrap().1.energy_drift;
    let ratio = drift(0.1) / drift(0.05);
    assert!(ratio > 10.0 && ratio < 24.0, "{ratio}");
}

#[test]
fn adaptive_and_fixed_step_agree() {
    let q = [0.0, 0.5, -0.5, 0.5];
    let v = [1.0, -0.5];
    let (a, _) = integrate_geodesic(AD, &EngelFlat, &q, &v, &cfg(1e-2, 3.0)).unwrap();
    let adaptive = IntegratorConfig { method: Method::Rk45Adaptive, dt: 0.1, t_end: 3.0, rtol: 1e-11, atol: 1e-13 };
    let (b, _) = integrate_geodesic(AD, &EngelFlat, &q, &v, &adaptive).unwrap();
    for (x, y) in a.last().iter().zip(b.last()) {
        assert!((x - y).abs() < 1e-8);
    }
}

#[test]
fn geodesics_need_an_orthonormal_declaration() {
    use nhframes::cartan::BFinal;
    let penny = Penny::new(PennyParams::default());
    let bf = BFinal::new(AD, &penny);
    let e = nh_geodesic_rhs(AD, &bf, &[0.0; 4], &[1.0, 0.0]);
    assert!(matches!(e, Err(nhframes::Error::NotOrthonormal)));
}
