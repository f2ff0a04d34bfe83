//! G-Chaplygin systems on T*S² written in body variables `(L, γ)`:
//! Veselova's system, Chaplygin's rolling ball ("marble"), the rubber ball
//! and the homogeneous ball, with integrals, invariant measures and the
//! reconstruction of the contact point.

use crate::diff::{jacobian, DiffEngine, VectorFn};
use crate::error::{Error, Result};
use crate::linalg::{Mat3, Vec3};
use crate::ode::{OdeSystem, Trajectory};
use crate::scalar::{seed, Dual, Real};
use crate::so3::{hat, project_to_so3};
use serde::{Deserialize, Serialize};

/// Tolerance of the constraint preconditions on `(L, γ)` states.
pub const CONSTRAINT_TOL: f64 = 1e-8;

/// Principal moments `I₁, I₂, I₃`, mass `μ` and radius `r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyParams {
    pub inertia: [f64; 3],
    #[serde(default)]
    pub mu: f64,
    #[serde(default)]
    pub r: f64,
}

impl Default for BodyParams {
    fn default() -> Self {
        Self {
            inertia: [1.0, 2.0, 3.0],
            mu: 1.0,
            r: 1.0,
        }
    }
}

impl BodyParams {
    pub fn new(inertia: [f64; 3], mu: f64, r: f64) -> Self {
        Self { inertia, mu, r }
    }
    pub fn validate(&self) -> Result<()> {
        if self.inertia.iter().any(|&i| !(i.is_finite() && i > 0.0)) {
            return Err(Error::Invalid(format!("inertia {:?} must be positive", self.inertia)));
        }
        if !(self.mu.is_finite() && self.mu >= 0.0 && self.r.is_finite() && self.r >= 0.0) {
            return Err(Error::Invalid("mass and radius must be non-negative".into()));
        }
        Ok(())
    }
    /// `validate` plus `I₁ = I₂ = I₃` for the homogeneous ball.
    pub fn validate_for(&self, system: System) -> Result<()> {
        self.validate()?;
        let i = self.inertia;
        if system == System::Homogeneous && (i[0] != i[1] || i[1] != i[2]) {
            return Err(Error::Invalid(format!("homogeneous ball needs equal inertias, got {i:?}")));
        }
        Ok(())
    }
    pub fn mr2(&self) -> f64 {
        self.mu * self.r * self.r
    }
    pub fn a<S: Real>(&self) -> Mat3<S> {
        Mat3::diag(Vec3::from_f64(self.inertia))
    }
    pub fn a_inv<S: Real>(&self) -> Mat3<S> {
        let i = self.inertia;
        Mat3::diag(Vec3::from_f64([1.0 / i[0], 1.0 / i[1], 1.0 / i[2]]))
    }
    /// `Ã⁻¹ = (A + μr² id)⁻¹`.
    pub fn a_tilde_inv<S: Real>(&self) -> Mat3<S> {
        let (i, d) = (self.inertia, self.mr2());
        Mat3::diag(Vec3::from_f64([1.0 / (i[0] + d), 1.0 / (i[1] + d), 1.0 / (i[2] + d)]))
    }
    pub fn a_tilde<S: Real>(&self) -> Mat3<S> {
        let (i, d) = (self.inertia, self.mr2());
        Mat3::diag(Vec3::from_f64([i[0] + d, i[1] + d, i[2] + d]))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum System {
    Veselova,
    Marble,
    Rubber,
    /// Chaplygin's ball with `I₁ = I₂ = I₃`.
    Homogeneous,
}

impl System {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "veselova" => Ok(System::Veselova),
            "marble" => Ok(System::Marble),
            "rubber" => Ok(System::Rubber),
            "homogeneous" => Ok(System::Homogeneous),
            other => Err(Error::Invalid(format!("unknown system id `{other}`"))),
        }
    }
    pub fn name(&self) -> &'static str {
        match self {
            System::Veselova => "veselova",
            System::Marble => "marble",
            System::Rubber => "rubber",
            System::Homogeneous => "homogeneous",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LGammaState {
    pub l: Vec3<f64>,
    pub gamma: Vec3<f64>,
}

impl LGammaState {
    pub fn new(l: [f64; 3], gamma: [f64; 3]) -> Self {
        Self {
            l: Vec3::from_f64(l),
            gamma: Vec3::from_f64(gamma),
        }
    }
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.l.values().to_vec();
        v.extend(self.gamma.values());
        v
    }
    pub fn from_slice(y: &[f64]) -> Self {
        Self {
            l: Vec3::from_slice(&y[0..3]),
            gamma: Vec3::from_slice(&y[3..6]),
        }
    }
}

fn unit_gamma<S: Real>(gamma: Vec3<S>) -> Result<()> {
    let e = (gamma.norm2().value() - 1.0).abs();
    if e > CONSTRAINT_TOL {
        return Err(Error::Constraint {
            what: "|γ| = 1",
            residual: e,
            tol: CONSTRAINT_TOL,
        });
    }
    Ok(())
}

/// `λ = (L, A⁻¹γ × A⁻¹L) / (γ, A⁻¹γ)`.
pub fn veselova_lambda<S: Real>(p: &BodyParams, l: Vec3<S>, gamma: Vec3<S>) -> S {
    let ai = p.a_inv::<S>();
    let (aig, ail) = (ai.mul_vec(gamma), ai.mul_vec(l));
    l.dot(aig.cross(ail)) / gamma.dot(aig)
}

/// Veselova's multiplier at a state satisfying `(A⁻¹L, γ) = 0`.
pub fn veselova_multiplier(p: &BodyParams, st: &LGammaState) -> Result<f64> {
    let c = p.a_inv::<f64>().mul_vec(st.l).dot(st.gamma).abs();
    if c > CONSTRAINT_TOL {
        return Err(Error::Constraint {
            what: "(A⁻¹L, γ) = 0",
            residual: c,
            tol: CONSTRAINT_TOL,
        });
    }
    Ok(veselova_lambda(p, st.l, st.gamma))
}

/// `L̇ = L×Ω + λγ`, `γ̇ = γ×Ω` with `Ω = A⁻¹L`.
pub fn veselova_rhs<S: Real>(p: &BodyParams, l: Vec3<S>, gamma: Vec3<S>) -> (Vec3<S>, Vec3<S>) {
    let omega = p.a_inv::<S>().mul_vec(l);
    let lambda = veselova_lambda(p, l, gamma);
    (l.cross(omega).add(gamma.scale(lambda)), gamma.cross(omega))
}

/// Veselova's field off the constraint surface, extended so that the fibre
/// coordinate `s = (A⁻¹L, γ)/(A⁻¹γ, γ)` is conserved rather than
/// `(A⁻¹L, γ)`. Both extensions agree on the surface; this is the one for
/// which `(A⁻¹γ, γ)^{-1/2} dL dγ` is invariant in `R⁶` (the other one
/// preserves `(A⁻¹γ, γ)^{1/2} dL dγ`).
pub fn veselova_rhs_extended<S: Real>(p: &BodyParams, l: Vec3<S>, gamma: Vec3<S>) -> (Vec3<S>, Vec3<S>) {
    let ai = p.a_inv::<S>();
    let aig = ai.mul_vec(gamma);
    let omega = ai.mul_vec(l);
    let q = gamma.dot(aig);
    let c = omega.dot(gamma);
    let gd = gamma.cross(omega);
    let qdot = aig.dot(gd) * 2.0;
    let lambda = veselova_lambda(p, l, gamma) + c * qdot / (q * q);
    (l.cross(omega).add(gamma.scale(lambda)), gd)
}

/// `L = ÃΩ − μr²(γ, Ω)γ`.
pub fn marble_l_of_omega<S: Real>(p: &BodyParams, gamma: Vec3<S>, omega: Vec3<S>) -> Vec3<S> {
    p.a_tilde::<S>()
        .mul_vec(omega)
        .sub(gamma.scale(gamma.dot(omega) * p.mr2()))
}

/// `Ω = Ã⁻¹L + αÃ⁻¹γ` with `α = μr²(γ, Ã⁻¹L) / (1 − μr²(γ, Ã⁻¹γ))`.
pub fn marble_omega_of_l<S: Real>(p: &BodyParams, gamma: Vec3<S>, l: Vec3<S>) -> Vec3<S> {
    let ati = p.a_tilde_inv::<S>();
    let (atl, atg) = (ati.mul_vec(l), ati.mul_vec(gamma));
    let d = p.mr2();
    let alpha = gamma.dot(atl) * d / (S::one() - gamma.dot(atg) * d);
    atl.add(atg.scale(alpha))
}

/// `L̇ = L×Ω`, `γ̇ = γ×Ω`.
pub fn marble_rhs<S: Real>(p: &BodyParams, l: Vec3<S>, gamma: Vec3<S>) -> (Vec3<S>, Vec3<S>) {
    let omega = marble_omega_of_l(p, gamma, l);
    (l.cross(omega), gamma.cross(omega))
}

fn directional_omega<S: Real>(p: &BodyParams, gamma: Vec3<S>, l: Vec3<S>, dg: Vec3<S>, dl: Vec3<S>) -> Vec3<S> {
    let x = seed(&[gamma.x, gamma.y, gamma.z, l.x, l.y, l.z], &[dg.x, dg.y, dg.z, dl.x, dl.y, dl.z]);
    let om: Vec3<Dual<S>> = marble_omega_of_l(p, Vec3::new(x[0], x[1], x[2]), Vec3::new(x[3], x[4], x[5]));
    Vec3::new(om.x.eps, om.y.eps, om.z.eps)
}

/// Rubber-ball multiplier from `d/dt (Ω, γ) = 0`, with the Jacobians of the
/// inverse marble map taken by dual numbers.
pub fn rubber_lambda<S: Real>(p: &BodyParams, l: Vec3<S>, gamma: Vec3<S>) -> S {
    let omega = marble_omega_of_l(p, gamma, l);
    let z = Vec3::zero();
    let dl_drift = directional_omega(p, gamma, l, z, l.cross(omega));
    let dg_drift = directional_omega(p, gamma, l, gamma.cross(omega), z);
    let dl_gamma = directional_omega(p, gamma, l, z, gamma);
    -(dl_drift.dot(gamma) + dg_drift.dot(gamma)) / dl_gamma.dot(gamma)
}

/// `L̇ = L×Ω + λγ`, `γ̇ = γ×Ω` with the marble relation between `Ω` and `L`.
pub fn rubber_rhs<S: Real>(p: &BodyParams, l: Vec3<S>, gamma: Vec3<S>) -> (Vec3<S>, Vec3<S>) {
    let omega = marble_omega_of_l(p, gamma, l);
    let lambda = rubber_lambda(p, l, gamma);
    (l.cross(omega).add(gamma.scale(lambda)), gamma.cross(omega))
}

/// Denominator `(D_L Ω·γ, γ)` of the rubber multiplier.
pub fn rubber_denominator(p: &BodyParams, st: &LGammaState) -> f64 {
    rubber_denominator_at(p, st.gamma)
}

/// `(D_L Ω·γ, γ)`; `Ω` is linear in `L`, so this depends on `γ` only.
pub fn rubber_denominator_at<S: Real>(p: &BodyParams, gamma: Vec3<S>) -> S {
    marble_omega_of_l(p, gamma, gamma).dot(gamma)
}

/// Rubber field off the constraint surface, extended so that
/// `(Ω, γ)/(D_L Ω·γ, γ)` is conserved (see [`veselova_rhs_extended`]).
pub fn rubber_rhs_extended<S: Real>(p: &BodyParams, l: Vec3<S>, gamma: Vec3<S>) -> (Vec3<S>, Vec3<S>) {
    let omega = marble_omega_of_l(p, gamma, l);
    let gd = gamma.cross(omega);
    let c = omega.dot(gamma);
    let g = seed(&gamma.to_array(), &gd.to_array());
    let d: Dual<S> = rubber_denominator_at(p, Vec3::new(g[0], g[1], g[2]));
    let lambda = rubber_lambda(p, l, gamma) + c * d.eps / (d.re * d.re);
    (l.cross(omega).add(gamma.scale(lambda)), gd)
}

/// `Ω(L, γ)` for each system.
pub fn omega_of<S: Real>(system: System, p: &BodyParams, l: Vec3<S>, gamma: Vec3<S>) -> Vec3<S> {
    match system {
        System::Veselova => p.a_inv::<S>().mul_vec(l),
        _ => marble_omega_of_l(p, gamma, l),
    }
}

pub fn rhs<S: Real>(system: System, p: &BodyParams, l: Vec3<S>, gamma: Vec3<S>) -> (Vec3<S>, Vec3<S>) {
    match system {
        System::Veselova => veselova_rhs(p, l, gamma),
        System::Rubber => rubber_rhs(p, l, gamma),
        System::Marble | System::Homogeneous => marble_rhs(p, l, gamma),
    }
}

/// Validated right-hand side: checks `|γ| = 1` and the nonholonomic constraint.
pub fn checked_rhs(system: System, p: &BodyParams, st: &LGammaState) -> Result<(Vec3<f64>, Vec3<f64>)> {
    unit_gamma(st.gamma)?;
    if let Some(c) = constraint(system, p, st) {
        if c.abs() > CONSTRAINT_TOL {
            return Err(Error::Constraint {
                what: "(Ω, γ) = 0",
                residual: c.abs(),
                tol: CONSTRAINT_TOL,
            });
        }
    }
    if system == System::Rubber {
        let d = rubber_denominator(p, st);
        if d.abs() < 1e-12 {
            return Err(Error::Singular {
                what: "rubber multiplier denominator",
            });
        }
    }
    Ok(rhs(system, p, st.l, st.gamma))
}

/// `(Ω, γ)` for the systems that forbid vertical spin.
pub fn constraint(system: System, p: &BodyParams, st: &LGammaState) -> Option<f64> {
    match system {
        System::Veselova | System::Rubber => Some(omega_of(system, p, st.l, st.gamma).dot(st.gamma)),
        _ => None,
    }
}

/// `H = ½(Ω, L)`.
pub fn energy(system: System, p: &BodyParams, st: &LGammaState) -> f64 {
    0.5 * omega_of(system, p, st.l, st.gamma).dot(st.l)
}

/// Veselova's quartic integral `G = (L, L) − (L, γ)²`.
pub fn veselova_quartic(st: &LGammaState) -> f64 {
    st.l.norm2() - st.l.dot(st.gamma).powi(2)
}

/// Named first integrals of each system, evaluated at a state.
pub fn integrals(system: System, p: &BodyParams, st: &LGammaState) -> Vec<(&'static str, f64)> {
    let mut out = vec![("H", energy(system, p, st)), ("gamma_norm2", st.gamma.norm2())];
    match system {
        System::Veselova => {
            out.push(("G", veselova_quartic(st)));
            out.push(("constraint", constraint(system, p, st).unwrap()));
        }
        System::Rubber => out.push(("constraint", constraint(system, p, st).unwrap())),
        System::Marble | System::Homogeneous => out.push(("l3", st.l.dot(st.gamma))),
    }
    out
}

/// Density of the invariant measure in `(L, γ)`.
pub fn measure_density<S: Real>(system: System, p: &BodyParams, gamma: Vec3<S>) -> S {
    match system {
        System::Veselova => gamma.dot(p.a_inv::<S>().mul_vec(gamma)).powf(-0.5),
        System::Marble | System::Homogeneous => {
            (S::one() - gamma.dot(p.a_tilde_inv::<S>().mul_vec(gamma)) * p.mr2()).powf(-0.5)
        }
        System::Rubber => rubber_legendre_det(p, gamma).powf(-0.5),
    }
}

/// `det(PᵀÃP)` for the compressed rubber Lagrangian on `T_γS²`:
/// `det A (A⁻¹γ, γ) + μr²(tr A − (Aγ, γ)) + μ²r⁴`.
pub fn rubber_legendre_det<S: Real>(p: &BodyParams, gamma: Vec3<S>) -> S {
    let d = p.mr2();
    let i = p.inertia;
    let det_a = i[0] * i[1] * i[2];
    let tr_a = i[0] + i[1] + i[2];
    gamma.dot(p.a_inv::<S>().mul_vec(gamma)) * det_a
        + (S::cst(tr_a) - gamma.dot(p.a::<S>().mul_vec(gamma))) * d
        + d * d
}

/// `det` of the compressed Legendre matrix `(Ã x, y)` on an orthonormal
/// basis of `γ^⊥`, built directly from the basis.
pub fn compressed_legendre_det(p: &BodyParams, gamma: Vec3<f64>, rubber: bool) -> f64 {
    let helper = if gamma.x.abs() < 0.9 { Vec3::new(1.0, 0.0, 0.0) } else { Vec3::new(0.0, 1.0, 0.0) };
    let e1 = gamma.cross(helper).normalized();
    let e2 = gamma.cross(e1);
    let m = if rubber { p.a_tilde::<f64>() } else { p.a::<f64>() };
    let g = |x: Vec3<f64>, y: Vec3<f64>| m.mul_vec(x).dot(y);
    g(e1, e1) * g(e2, e2) - g(e1, e2) * g(e2, e1)
}

/// `|F⁻²·det A − det Leg|` for Veselova: the density is the inverse square
/// root of the compressed Legendre determinant up to the constant `det A`.
pub fn veselova_legendre_consistency(p: &BodyParams, gamma: Vec3<f64>) -> f64 {
    let f = measure_density(System::Veselova, p, gamma);
    let det_a = p.inertia.iter().product::<f64>();
    (det_a / (f * f) - compressed_legendre_det(p, gamma, false)).abs()
}

/// `F(γ)·X(L, γ)` on `R⁶`, for divergence tests.
pub struct WeightedField {
    pub system: System,
    pub p: BodyParams,
    /// Use `F ≡ 1` instead of the system density.
    pub unit_density: bool,
}

impl VectorFn for WeightedField {
    fn dim_in(&self) -> usize {
        6
    }
    fn dim_out(&self) -> usize {
        6
    }
    fn eval<S: Real>(&self, y: &[S]) -> Vec<S> {
        let (l, g) = (Vec3::from_slice(&y[0..3]), Vec3::from_slice(&y[3..6]));
        let (ld, gd) = match self.system {
            System::Veselova => veselova_rhs_extended(&self.p, l, g),
            System::Rubber => rubber_rhs_extended(&self.p, l, g),
            other => rhs(other, &self.p, l, g),
        };
        let f = if self.unit_density {
            S::one()
        } else {
            measure_density(self.system, &self.p, g)
        };
        [ld.to_array(), gd.to_array()].concat().into_iter().map(|x| x * f).collect()
    }
}

/// `div(F·X)` at a state, in `R⁶ ∋ (L, γ)`.
pub fn measure_invariance_residual(
    engine: DiffEngine,
    system: System,
    p: &BodyParams,
    st: &LGammaState,
    unit_density: bool,
) -> f64 {
    let field = WeightedField {
        system,
        p: *p,
        unit_density,
    };
    let j = jacobian(engine, &field, &st.to_vec());
    (0..6).map(|i| j[(i, i)]).sum()
}

/// The `(L, γ)` flow as an ODE; `γ` is renormalised after every step.
pub struct ChaplyginFlow {
    pub system: System,
    pub p: BodyParams,
}

impl OdeSystem for ChaplyginFlow {
    fn dim(&self) -> usize {
        6
    }
    fn rhs(&self, _t: f64, y: &[f64]) -> Result<Vec<f64>> {
        let (ld, gd) = rhs(self.system, &self.p, Vec3::from_slice(&y[0..3]), Vec3::from_slice(&y[3..6]));
        Ok([ld.values(), gd.values()].concat())
    }
    fn after_step(&self, y: &mut [f64]) {
        let n = (y[3] * y[3] + y[4] * y[4] + y[5] * y[5]).sqrt();
        y[3..6].iter_mut().for_each(|x| *x /= n);
    }
    fn check(&self, _t: f64, y: &[f64]) -> Result<()> {
        checked_rhs(self.system, &self.p, &LGammaState::from_slice(y)).map(|_| ())
    }
}

/// A state on `|γ| = 1` satisfying the system's constraint, built from a
/// Poisson vector and a free vector `w`: for the constrained systems
/// `L` is adjusted along `γ` so that `(Ω, γ) = 0`.
pub fn constrained_state(system: System, p: &BodyParams, gamma: [f64; 3], w: [f64; 3]) -> LGammaState {
    let g = Vec3::<f64>::from_f64(gamma).normalized();
    let w = Vec3::<f64>::from_f64(w);
    match system {
        System::Veselova | System::Rubber => {
            // Ω(L, γ) is linear in L: pick L = w + sγ with (Ω(L), γ) = 0
            let c0 = omega_of(system, p, w, g).dot(g);
            let c1 = omega_of(system, p, g, g).dot(g);
            LGammaState {
                l: w.add(g.scale(-c0 / c1)),
                gamma: g,
            }
        }
        _ => LGammaState { l: w, gamma: g },
    }
}

/// Chaplygin's ball with attitude and contact point: state
/// `(L, R row-major, x, y)`, `Ṙ = R hat(Ω)`, `ż = r ω×k`, `ω = RΩ`.
pub struct MarbleReconstruction {
    pub p: BodyParams,
}

pub struct ReconstructionState {
    pub l: Vec3<f64>,
    pub r: Mat3<f64>,
    pub z: [f64; 2],
}

impl ReconstructionState {
    pub fn from_slice(y: &[f64]) -> Self {
        let mut r = Mat3::<f64>::zero();
        for i in 0..3 {
            for j in 0..3 {
                r.m[i][j] = y[3 + 3 * i + j];
            }
        }
        Self {
            l: Vec3::from_slice(&y[0..3]),
            r,
            z: [y[12], y[13]],
        }
    }
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.l.values().to_vec();
        for row in self.r.m {
            v.extend(row);
        }
        v.extend(self.z);
        v
    }
    pub fn gamma(&self) -> Vec3<f64> {
        self.r.row(2)
    }
}

impl MarbleReconstruction {
    pub fn omega_space(&self, st: &ReconstructionState) -> Vec3<f64> {
        st.r.mul_vec(marble_omega_of_l(&self.p, st.gamma(), st.l))
    }
    /// `ż = r ω×k = r(ω₂, −ω₁)`.
    pub fn contact_velocity(&self, st: &ReconstructionState) -> [f64; 2] {
        let w = self.omega_space(st);
        [self.p.r * w.y, -self.p.r * w.x]
    }
}

impl OdeSystem for MarbleReconstruction {
    fn dim(&self) -> usize {
        14
    }
    fn rhs(&self, _t: f64, y: &[f64]) -> Result<Vec<f64>> {
        let st = ReconstructionState::from_slice(y);
        let omega = marble_omega_of_l(&self.p, st.gamma(), st.l);
        let ld = st.l.cross(omega);
        let rd = st.r.mul(&hat(omega));
        let zd = self.contact_velocity(&st);
        let mut out = ld.values().to_vec();
        for row in rd.m {
            out.extend(row);
        }
        out.extend(zd);
        Ok(out)
    }
    fn after_step(&self, y: &mut [f64]) {
        let mut st = ReconstructionState::from_slice(y);
        st.r = project_to_so3(&st.r);
        y.copy_from_slice(&st.to_vec());
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PhaseDriftReport {
    /// Max `|d/dt(z, ℓ×k) − r(2T − ℓ₃ω₃)|` along the trajectory.
    pub identity_residual: f64,
    /// Max change of the spatial momentum `ℓ = RL`.
    pub ell_drift: f64,
    /// Smooth-window mean of `d/dt(z, ℓ×k)`; its sign is the drift direction.
    pub mean_drift_rate: f64,
    /// Smooth-window mean of the velocity normal to `ℓ×k` and its amplitude.
    pub sway_mean: f64,
    pub sway_amplitude: f64,
}

/// Weights `exp(−1/(s(1−s)))` on `s ∈ (0, 1)`, normalised; averages of
/// quasi-periodic signals with these weights converge faster than any power
/// of the window length.
pub fn smooth_window_mean(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 3 {
        return values.iter().sum::<f64>() / n.max(1) as f64;
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, v) in values.iter().enumerate() {
        let s = k as f64 / (n - 1) as f64;
        let w = if s <= 0.0 || s >= 1.0 { 0.0 } else { (-1.0 / (s * (1.0 - s))).exp() };
        num += w * v;
        den += w;
    }
    num / den
}

/// Phase-drift diagnostics along a reconstructed marble trajectory.
pub fn reconstruct_and_phase_drift(p: &BodyParams, traj: &Trajectory) -> Result<PhaseDriftReport> {
    let sys = MarbleReconstruction { p: *p };
    let k = Vec3::new(0.0, 0.0, 1.0);
    let first = ReconstructionState::from_slice(&traj.y[0]);
    let ell0 = first.r.mul_vec(first.l);
    let dir = ell0.cross(k);
    if dir.norm() < 1e-12 {
        return Err(Error::Invalid("ℓ is vertical; the drift direction ℓ×k is undefined".into()));
    }
    let mut identity_residual: f64 = 0.0;
    let mut ell_drift: f64 = 0.0;
    let mut rates = Vec::with_capacity(traj.len());
    let mut sway = Vec::with_capacity(traj.len());
    for y in &traj.y {
        let st = ReconstructionState::from_slice(y);
        let ell = st.r.mul_vec(st.l);
        ell_drift = ell_drift.max(ell.sub(ell0).norm());
        let lk = ell.cross(k);
        let zd = sys.contact_velocity(&st);
        let rate = zd[0] * lk.x + zd[1] * lk.y;
        let omega_body = marble_omega_of_l(p, st.gamma(), st.l);
        let w = st.r.mul_vec(omega_body);
        let two_t = omega_body.dot(st.l);
        identity_residual = identity_residual.max((rate - p.r * (two_t - ell.z * w.z)).abs());
        rates.push(rate);
        // unit horizontal normal to ℓ×k
        let nrm = (ell.x * ell.x + ell.y * ell.y).sqrt();
        sway.push((zd[0] * ell.x + zd[1] * ell.y) / nrm);
    }
    let sway_amplitude = sway.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(PhaseDriftReport {
        identity_residual,
        ell_drift,
        mean_drift_rate: smooth_window_mean(&rates),
        sway_mean: smooth_window_mean(&sway),
        sway_amplitude,
    })
}

/// Reduced marble on `T*S²` in the variables `(a, γ)` with `a = γ×L` and
/// `ℓ₃ = (L, γ)` fixed: `γ̇ = γ×Ω`, `ȧ = −2Hγ + (γ, Ω)(a×γ + ℓ₃γ)`.
pub struct ReducedMarble {
    pub p: BodyParams,
    pub l3: f64,
}

impl ReducedMarble {
    pub fn l_of(&self, a: Vec3<f64>, gamma: Vec3<f64>) -> Vec3<f64> {
        a.cross(gamma).add(gamma.scale(self.l3))
    }
}

impl OdeSystem for ReducedMarble {
    fn dim(&self) -> usize {
        6
    }
    fn rhs(&self, _t: f64, y: &[f64]) -> Result<Vec<f64>> {
        let (a, g) = (Vec3::from_slice(&y[0..3]), Vec3::from_slice(&y[3..6]));
        let l = self.l_of(a, g);
        let omega = marble_omega_of_l(&self.p, g, l);
        let h = 0.5 * omega.dot(l);
        let ad = g.scale(-2.0 * h).add(l.scale(g.dot(omega)));
        Ok([ad.values(), g.cross(omega).values()].concat())
    }
    fn after_step(&self, y: &mut [f64]) {
        let n = (y[3] * y[3] + y[4] * y[4] + y[5] * y[5]).sqrt();
        y[3..6].iter_mut().for_each(|x| *x /= n);
    }
}

/// Homogeneous reduced marble: `ȧ = ω₃ a×γ − |a|²γ/(I + μr²)`, `ω₃ = (γ, Ω)`.
pub fn homogeneous_a_rhs(p: &BodyParams, l3: f64, a: Vec3<f64>, gamma: Vec3<f64>) -> Vec3<f64> {
    let l = a.cross(gamma).add(gamma.scale(l3));
    let w3 = gamma.dot(marble_omega_of_l(p, gamma, l));
    a.cross(gamma).scale(w3).sub(gamma.scale(a.norm2() / (p.inertia[0] + p.mr2())))
}
