//! The acceptance criteria as runnable checks. Each check returns its
//! measured numbers alongside the verdict so a failing run is explainable.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cartan::{
    bfinal_normalize, canonical_line_field_check, symmetry_constancy_report, ConformallyScaled,
    EngelFlat, NhStructure, Penny, PennyParams,
};
use crate::chaplygin::{
    constrained_state, constraint, energy, integrals, marble_l_of_omega, measure_invariance_residual,
    reconstruct_and_phase_drift, rubber_rhs, veselova_quartic, veselova_rhs, BodyParams,
    ChaplyginFlow, LGammaState, MarbleReconstruction, ReconstructionState, System,
};
use crate::geodesic::{collinearity_residual, integrate_geodesic};
use crate::hamiltonize::{
    conformal_obstruction, d_scaled_omega, skew_gradient, veselova_noise_floor,
    AlmostHamiltonianChart, Factor, GridSpec, MarbleSo3, ObstructionReport, SphereChart,
    CONFORMAL_TOL, NOISE_FACTOR,
};
use crate::linalg::Vec3;
use crate::ode::{drift, integrate, IntegratorConfig};
use crate::so3::exp_so3;
use crate::{DiffEngine, Result};

pub const CRITERIA: [u8; 10] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];

/// Criteria whose claim is contradicted by the measurement. They are still
/// run at full tolerance and reported as failing; the acceptance harness
/// only treats a failure here as expected, and flags an unexpected pass.
///
/// 7: the reduced marble with f = [1 − μr²(γ,Ã⁻¹γ)]^{−1/2} is conformally
/// symplectic to round-off (max |i_X d(fΩ)| ≈ 5e-16 against a Veselova floor
/// of ≈ 1.3e-16), so the claimed obstruction above 10³× the floor is absent.
pub const KNOWN_UNATTAINABLE: [u8; 1] = [7];

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        format!("[{tag}] {:>2} {}: {}", self.id, self.title, self.detail)
    }
}

fn cfg(dt: f64, t_end: f64) -> IntegratorConfig {
    IntegratorConfig {
        dt,
        t_end,
        ..Default::default()
    }
}

fn sample<C: NhStructure>(s: &C, rng: &mut ChaCha8Rng) -> Vec<f64> {
    s.sample_box().iter().map(|&(lo, hi)| rng.gen_range(lo..hi)).collect()
}

/// Uniform direction on S² by rejection.
pub fn random_unit(rng: &mut impl Rng) -> [f64; 3] {
    loop {
        let g = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let n: f64 = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.1 && n <= 1.0 {
            return g.map(|x| x / n);
        }
    }
}

/// A constrained state from a random `γ` and a free vector in [−1,1]³
/// (see `constrained_state`).
pub fn random_state(system: System, p: &BodyParams, rng: &mut impl Rng) -> LGammaState {
    let g = random_unit(rng);
    let w = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
    constrained_state(system, p, g, w)
}

fn body() -> BodyParams {
    BodyParams::new([1.0, 2.0, 3.0], 1.0, 1.0)
}

pub fn run(id: u8, engine: DiffEngine) -> Result<CriterionResult> {
    let (title, passed, detail) = match id {
        1 => penny_geodesics(engine)?,
        2 => penny_invariants(engine)?,
        3 => second_order_relation(engine)?,
        4 => line_field(engine)?,
        5 => veselova_integrals()?,
        6 => invariant_measures(engine)?,
        7 => discrimination(engine)?,
        8 => closed_form(engine)?,
        9 => phase_drift()?,
        10 => cross_oracle()?,
        _ => return Err(crate::Error::Invalid(format!("no acceptance criterion {id}"))),
    };
    Ok(CriterionResult { id, title, passed, detail })
}

/// Runs every criterion; an error inside a criterion counts as a failure.
pub fn run_all(engine: DiffEngine) -> Vec<CriterionResult> {
    CRITERIA
        .iter()
        .map(|&id| {
            run(id, engine).unwrap_or_else(|e| CriterionResult {
                id,
                title: "error",
                passed: false,
                detail: e.to_string(),
            })
        })
        .collect()
}

type Outcome = Result<(&'static str, bool, String)>;

fn penny_geodesics(engine: DiffEngine) -> Outcome {
    let p = PennyParams::default();
    let penny = Penny::new(p);
    let q0 = [0.3, -0.2, 0.4, 0.0];
    let (_, s) = integrate_geodesic(engine, &penny, &q0, &[0.8, -0.6], &cfg(1e-3, 10.0))?;
    let v_drift = s.quasivelocity_drift.iter().cloned().fold(0.0, f64::max);
    // the heading turns at b/√(J/2)
    let (a, b) = (1.0, 0.5);
    let period = 2.0 * PI * p.k_spin() / b;
    let (traj, _) = integrate_geodesic(engine, &penny, &q0, &[a, b], &cfg(1e-3, period))?;
    let (s0, e) = (&traj.y[0], traj.last());
    let turn = (e[2] - s0[2] - 2.0 * PI).abs();
    let ret = (e[0] - s0[0]).hypot(e[1] - s0[1]);
    let (traj, _) = integrate_geodesic(engine, &penny, &[0.0, 0.0, 0.7, 0.0], &[1.2, 0.0], &cfg(1e-3, 10.0))?;
    let pts: Vec<[f64; 2]> = traj.y.iter().map(|y| [y[0], y[1]]).collect();
    let col = collinearity_residual(&pts);
    let ok = v_drift < 1e-9 && turn < 1e-9 && ret < 1e-5 && col < 1e-8;
    Ok((
        "penny geodesics",
        ok,
        format!("v drift {v_drift:.2e} (<1e-9), circle return {ret:.2e} (<1e-5), B=0 collinearity {col:.2e} (<1e-8)"),
    ))
}

fn penny_invariants(engine: DiffEngine) -> Outcome {
    let p = PennyParams { m: 1.3, a: 0.7, i: 0.45, j: 0.8 };
    let penny = Penny::new(p);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let tables = (0..20)
        .map(|_| bfinal_normalize(engine, &penny, &sample(&penny, &mut rng)).map(|x| x.1))
        .collect::<Result<Vec<_>>>()?;
    let report = symmetry_constancy_report(&tables, 1e-8);
    // structure constants of the scaled penny coframe pushed through the reductions
    let mm = p.m * p.a * p.a + p.i;
    let c324 = -(mm / p.m).sqrt() / p.a;
    let c423 = 2.0 * p.a / p.j * (p.m / mm).sqrt();
    let mut err: f64 = 0.0;
    for t in &tables {
        for (label, v) in t.entries() {
            let e = match label.as_str() {
                "T3_12" | "T4_23" => 1.0,
                "T3_24" => c324 * c423,
                _ => 0.0,
            };
            err = err.max((v - e).abs());
        }
    }
    let ok = report.max_spread < 1e-8 && err < 1e-8 && report.maximal;
    Ok((
        "penny Cartan invariants",
        ok,
        format!("spread {:.2e} (<1e-8), coefficient error {err:.2e} (<1e-8), verdict \"{}\"", report.max_spread, report.verdict),
    ))
}

fn second_order_relation(engine: DiffEngine) -> Outcome {
    let p = PennyParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = [0.0f64; 3];
    fn run_one<C: NhStructure>(e: DiffEngine, s: &C, rng: &mut ChaCha8Rng) -> Result<f64> {
        let mut w: f64 = 0.0;
        for _ in 0..20 {
            let (_, t) = bfinal_normalize(e, s, &sample(s, rng))?;
            w = w.max(t.second_order_residual().abs());
        }
        Ok(w)
    }
    worst[0] = run_one(engine, &Penny::new(p), &mut rng)?;
    worst[1] = run_one(engine, &EngelFlat, &mut rng)?;
    worst[2] = run_one(engine, &ConformallyScaled::perturbed(Penny::new(p), 0.1), &mut rng)?;
    let ok = worst.iter().all(|&w| w < 1e-6);
    Ok((
        "second-order torsion relation",
        ok,
        format!("penny {:.2e}, engel {:.2e}, perturbed {:.2e} (<1e-6)", worst[0], worst[1], worst[2]),
    ))
}

fn line_field(engine: DiffEngine) -> Outcome {
    let q = [0.5, -0.3, 0.2, 0.9];
    let a = canonical_line_field_check(engine, &Penny::new(PennyParams::default()), &q)?;
    let b = canonical_line_field_check(engine, &EngelFlat, &q)?;
    Ok((
        "canonical line field",
        a.ok() && b.ok(),
        format!(
            "penny η̄⁴([X₃,X₁]) {:.2e}, η̄⁴([X₃,X₂]) {:.2e}; engel {:.2e}, {:.2e}",
            a.x1_value, a.x2_value, b.x1_value, b.x2_value
        ),
    ))
}

fn veselova_integrals() -> Outcome {
    let p = body();
    let flow = ChaplyginFlow { system: System::Veselova, p };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = [0.0f64; 4];
    for _ in 0..10 {
        let st = random_state(System::Veselova, &p, &mut rng);
        let traj = integrate(&flow, &st.to_vec(), &cfg(1e-3, 10.0))?;
        let at = |y: &[f64]| LGammaState::from_slice(y);
        let d = [
            drift(&traj, |y| energy(System::Veselova, &p, &at(y))),
            drift(&traj, |y| veselova_quartic(&at(y))),
            drift(&traj, |y| at(y).gamma.norm2()),
            drift(&traj, |y| constraint(System::Veselova, &p, &at(y)).unwrap_or(f64::NAN)),
        ];
        for (w, x) in worst.iter_mut().zip(d) {
            *w = if x.is_nan() { f64::NAN } else { w.max(x) };
        }
    }
    let ok = worst.iter().all(|&w| w < 1e-8);
    Ok((
        "Veselova integrals",
        ok,
        format!("drift H {:.2e}, G {:.2e}, (γ,γ) {:.2e}, (A⁻¹L,γ) {:.2e} (<1e-8)", worst[0], worst[1], worst[2], worst[3]),
    ))
}

fn invariant_measures(engine: DiffEngine) -> Outcome {
    let p = body();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let worst = |system: System, unit: bool, rng: &mut ChaCha8Rng| -> f64 {
        (0..100)
            .map(|_| measure_invariance_residual(engine, system, &p, &random_state(system, &p, rng), unit).abs())
            .fold(0.0, f64::max)
    };
    let v = worst(System::Veselova, false, &mut rng);
    let m = worst(System::Marble, false, &mut rng);
    let u = worst(System::Marble, true, &mut rng);
    Ok((
        "invariant measures",
        v < 1e-9 && m < 1e-9 && u > 1e-3,
        format!("|div(FX)| Veselova {v:.2e}, marble {m:.2e} (<1e-9); marble F≡1 {u:.2e} (>1e-3)"),
    ))
}

fn discrimination(engine: DiffEngine) -> Outcome {
    let p = body();
    let points = GridSpec::sphere(10).points();
    let floor = veselova_noise_floor(engine, &p, &points)?;
    let ves = conformal_obstruction(engine, &SphereChart::veselova(p), Factor::Density, &points, Some(floor))?;
    let rub = conformal_obstruction(engine, &SphereChart::rubber(p), Factor::Density, &points, Some(floor))?;
    let mut ok = ves.max_d_f_omega < 1e-9 && rub.max_d_f_omega < 1e-9;
    let mut marble = String::new();
    for l3 in [0.0, 0.5] {
        let r = conformal_obstruction(engine, &SphereChart::reduced_marble(p, l3), Factor::Density, &points, Some(floor))?;
        ok &= r.max_ix_d_f_omega > NOISE_FACTOR * floor;
        marble += &format!(", reduced marble ℓ₃={l3} |i_X d(fΩ)| {:.2e}", r.max_ix_d_f_omega);
    }
    Ok((
        "Hamiltonization discrimination",
        ok,
        format!(
            "{} points; |d(fΩ)| Veselova {:.2e}, rubber {:.2e} (<1e-9){marble} (need >{:.2e} = 10³× floor)",
            points.len(),
            ves.max_d_f_omega,
            rub.max_d_f_omega,
            NOISE_FACTOR * floor
        ),
    ))
}

fn closed_form(engine: DiffEngine) -> Outcome {
    let chart = MarbleSo3 { p: BodyParams::new([1.0; 3], 1.0, 1.0) };
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let x: Vec<f64> = (0..chart.dim()).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let ix = d_scaled_omega(engine, &chart, &x, Factor::One).interior(&skew_gradient(engine, &chart, &x)?)?;
        worst = worst.max(ix.sub(&chart.homogeneous_closed_form(&x)?)?.max_abs());
    }
    Ok((
        "homogeneous marble closed form",
        worst < 1e-10,
        format!("max coefficient error {worst:.2e} over 50 points (<1e-10)"),
    ))
}

fn reconstruction(p: BodyParams, omega0: [f64; 3]) -> Result<crate::ode::Trajectory> {
    let r0 = exp_so3(Vec3::from_f64([0.4, 0.1, -0.2]));
    let l0 = marble_l_of_omega(&p, r0.row(2), Vec3::from_f64(omega0));
    let st = ReconstructionState { l: l0, r: r0, z: [0.0, 0.0] };
    integrate(&MarbleReconstruction { p }, &st.to_vec(), &cfg(1e-3, 10.0))
}

fn phase_drift() -> Outcome {
    let rep = reconstruct_and_phase_drift(&body(), &reconstruction(body(), [0.7, -0.3, 0.5])?)?;
    let hom = BodyParams::new([2.0; 3], 1.0, 1.0);
    let traj = reconstruction(hom, [0.7, -0.3, 0.5])?;
    let pts: Vec<[f64; 2]> = traj.y.iter().map(|y| [y[12], y[13]]).collect();
    let col = collinearity_residual(&pts);
    Ok((
        "phase drift",
        rep.identity_residual < 1e-8 && col < 1e-8,
        format!("identity residual {:.2e}, homogeneous collinearity {col:.2e} (<1e-8)", rep.identity_residual),
    ))
}

/// Relative agreement where the maxima are genuine; where both sit at
/// round-off a relative comparison is meaningless and both must stay below
/// the conformal tolerance instead.
fn maxima_agree(a: f64, b: f64) -> bool {
    if a < CONFORMAL_TOL || b < CONFORMAL_TOL {
        a < CONFORMAL_TOL && b < CONFORMAL_TOL
    } else {
        (a - b).abs() / a.max(b) < 1e-4
    }
}

fn reports_agree(a: &ObstructionReport, b: &ObstructionReport) -> bool {
    maxima_agree(a.max_d_f_omega, b.max_d_f_omega) && maxima_agree(a.max_ix_d_f_omega, b.max_ix_d_f_omega)
}

fn cross_oracle() -> Outcome {
    let (ad, fd) = (DiffEngine::Ad, DiffEngine::fd());
    let p = body();
    let points = GridSpec::sphere(5).points();
    let mut pairs = 0;
    let mut bad = Vec::new();
    let mut check = |name: String, a: ObstructionReport, b: ObstructionReport| {
        pairs += 1;
        if !reports_agree(&a, &b) {
            bad.push(format!("{name} (ad {:.3e}/{:.3e}, fd {:.3e}/{:.3e})", a.max_d_f_omega, a.max_ix_d_f_omega, b.max_d_f_omega, b.max_ix_d_f_omega));
        }
    };
    let charts = [
        SphereChart::veselova(p),
        SphereChart::rubber(p),
        SphereChart::reduced_marble(p, 0.0),
        SphereChart::reduced_marble(p, 0.5),
    ];
    for chart in &charts {
        for f in [Factor::Density, Factor::One] {
            let a = conformal_obstruction(ad, chart, f, &points, None)?;
            let b = conformal_obstruction(fd, chart, f, &points, None)?;
            check(format!("{} {}", chart.name(), f.name()), a, b);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let so3: Vec<Vec<f64>> = (0..50).map(|_| (0..6).map(|_| rng.gen_range(-1.5..1.5)).collect()).collect();
    for q in [BodyParams::new([1.0; 3], 1.0, 1.0), p] {
        for f in [Factor::Density, Factor::One] {
            let chart = MarbleSo3 { p: q };
            let a = conformal_obstruction(ad, &chart, f, &so3, None)?;
            let b = conformal_obstruction(fd, &chart, f, &so3, None)?;
            check(format!("{} {}", chart.name(), f.name()), a, b);
        }
    }
    let r0 = BodyParams::new([1.0, 2.0, 3.0], 1.0, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut rubber: f64 = 0.0;
    for _ in 0..100 {
        let st = random_state(System::Veselova, &r0, &mut rng);
        let (l1, g1) = rubber_rhs(&r0, st.l, st.gamma);
        let (l2, g2) = veselova_rhs(&r0, st.l, st.gamma);
        rubber = rubber.max(l1.sub(l2).norm().max(g1.sub(g2).norm()));
    }
    let ok = bad.is_empty() && rubber < 1e-10;
    let mut detail = format!("{pairs} AD/FD report pairs, disagreeing: {}; rubber r→0 vs Veselova {rubber:.2e} (<1e-10)", bad.len());
    if !bad.is_empty() {
        detail += &format!(" [{}]", bad.join("; "));
    }
    Ok(("cross-oracle", ok, detail))
}

/// Integrals of a system as (name, drift) over a trajectory.
pub fn integral_drifts(system: System, p: &BodyParams, traj: &crate::ode::Trajectory) -> Vec<(&'static str, f64)> {
    let names: Vec<&'static str> = integrals(system, p, &LGammaState::from_slice(&traj.y[0]))
        .into_iter()
        .map(|x| x.0)
        .collect();
    names
        .into_iter()
        .map(|name| {
            let d = drift(traj, |y| {
                integrals(system, p, &LGammaState::from_slice(y))
                    .into_iter()
                    .find(|(n, _)| *n == name)
                    .map_or(f64::NAN, |x| x.1)
            });
            (name, d)
        })
        .collect()
}
