//! Almost-symplectic forms of Chaplygin systems, skew gradients and the
//! conformal Hamiltonization obstruction `i_X d(fΩ)`.
//!
//! Forms follow `Ω_can = d(p·θ)` and skew gradients solve `i_X Ω = dH` with
//! the first-slot contraction, so `X` is the physical flow run backwards.
//! Closedness and the obstruction are insensitive to that sign.

use crate::chaplygin::{
    marble_omega_of_l, marble_rhs, measure_density, rubber_rhs, veselova_rhs, BodyParams, LGammaState, System,
};
use crate::chart::{sphere_coords, sphere_frame, sphere_gamma, POLAR_CAP};
use crate::diff::{directional_derivative, gradient, DiffEngine, VectorFn};
use crate::exterior::exterior_derivative;
use crate::error::{Error, Result};
use crate::forms::Form;
use crate::linalg::{DMat, Mat3, Vec3};
use crate::ode::OdeSystem;
use crate::scalar::Real;
use crate::so3::exp_so3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Below this `d(fΩ)` (and `i_X d(fΩ)`) counts as zero.
pub const CONFORMAL_TOL: f64 = 1e-9;
/// A nonzero obstruction must exceed this multiple of the noise floor.
pub const NOISE_FACTOR: f64 = 1e3;
/// Forms with a larger coefficient-matrix condition number are degenerate.
pub const SINGULAR_COND: f64 = 1e12;

/// An almost-symplectic form and Hamiltonian on a chart. Points are `x`;
/// quantities are evaluated at the point reached from `x` by a local
/// displacement `u`, and the `∂/∂u` at `u = 0` are the basis vectors dual to
/// the basis the form coefficients refer to.
pub trait AlmostHamiltonianChart: Sync {
    fn dim(&self) -> usize;
    fn name(&self) -> String;
    fn omega<S: Real>(&self, x: &[f64], u: &[S]) -> Form<S>;
    fn hamiltonian<S: Real>(&self, x: &[f64], u: &[S]) -> S;
    /// Candidate conformal factor `F^{1/(m−1)}` from the invariant measure.
    fn density_factor<S: Real>(&self, x: &[f64], u: &[S]) -> S;
    /// Body-frame vertical `γ` at the displaced point.
    fn gamma<S: Real>(&self, x: &[f64], u: &[S]) -> Vec3<S>;
    /// `dβ^I` of the basis; empty for a coordinate basis.
    fn basis_differentials(&self) -> Vec<Form<f64>> {
        Vec::new()
    }
    fn check_point(&self, x: &[f64]) -> Result<()>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Factor {
    /// `f = F^{1/(m−1)}` with the system's measure density `F`.
    Density,
    /// `f ≡ 1`.
    One,
}

impl Factor {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "density" => Ok(Factor::Density),
            "one" => Ok(Factor::One),
            other => Err(Error::Invalid(format!("unknown conformal factor `{other}`"))),
        }
    }
    pub fn name(&self) -> &'static str {
        match self {
            Factor::Density => "density",
            Factor::One => "one",
        }
    }
    fn eval<S: Real, C: AlmostHamiltonianChart>(&self, chart: &C, x: &[f64], u: &[S]) -> S {
        match self {
            Factor::Density => chart.density_factor(x, u),
            Factor::One => S::one(),
        }
    }
}

/// Compressed systems on `T*S²` in the chart `(θ, φ, p₁, p₂)`, momenta in
/// the coframe `θ₁ = dθ`, `θ₂ = sinθ dφ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SphereSystem {
    Veselova,
    Rubber,
    /// Chaplygin's ball reduced at `ℓ₃ = (L, γ)`.
    ReducedMarble { l3: f64 },
}

#[derive(Clone, Copy, Debug)]
pub struct SphereChart {
    pub system: SphereSystem,
    pub p: BodyParams,
}

/// `(Ω, L, γ)` at chart coordinates.
pub struct SphereKinematics<S> {
    pub omega: Vec3<S>,
    pub l: Vec3<S>,
    pub gamma: Vec3<S>,
}

impl SphereChart {
    pub fn veselova(p: BodyParams) -> Self {
        Self {
            system: SphereSystem::Veselova,
            p,
        }
    }
    pub fn rubber(p: BodyParams) -> Self {
        Self {
            system: SphereSystem::Rubber,
            p,
        }
    }
    pub fn reduced_marble(p: BodyParams, l3: f64) -> Self {
        Self {
            system: SphereSystem::ReducedMarble { l3 },
            p,
        }
    }

    /// Parameters with `μr² = 0` for Veselova, whose Lagrangian has no
    /// rolling term.
    fn effective(&self) -> BodyParams {
        match self.system {
            SphereSystem::Veselova => BodyParams { mu: 0.0, r: 0.0, ..self.p },
            _ => self.p,
        }
    }

    /// Angular velocity, body momentum and Poisson vector; for Veselova and
    /// rubber through the inverse compressed Legendre map
    /// `v = (PᵀÃP)⁻¹p`, `Ω = Pv` with `P = [−e₂, e₁]`.
    pub fn kinematics<S: Real>(&self, q: &[S]) -> SphereKinematics<S> {
        let (theta, phi) = (q[0], q[1]);
        let gamma = sphere_gamma(theta, phi);
        let (e1, e2) = sphere_frame(theta, phi);
        let (p1, p2) = (q[2], q[3]);
        match self.system {
            SphereSystem::ReducedMarble { l3 } => {
                let l = e1.scale(p2).sub(e2.scale(p1)).add(gamma.scale(S::cst(l3)));
                SphereKinematics {
                    omega: marble_omega_of_l(&self.p, gamma, l),
                    l,
                    gamma,
                }
            }
            _ => {
                let at = self.effective().a_tilde::<S>();
                let (c1, c2) = (e2.neg(), e1);
                let (ac1, ac2) = (at.mul_vec(c1), at.mul_vec(c2));
                let (m11, m12, m22) = (c1.dot(ac1), c1.dot(ac2), c2.dot(ac2));
                let det = m11 * m22 - m12 * m12;
                let v1 = (m22 * p1 - m12 * p2) / det;
                let v2 = (m11 * p2 - m12 * p1) / det;
                let omega = c1.scale(v1).add(c2.scale(v2));
                SphereKinematics {
                    omega,
                    l: at.mul_vec(omega),
                    gamma,
                }
            }
        }
    }

    /// `(L, γ)` state of chart coordinates.
    pub fn state(&self, x: &[f64]) -> LGammaState {
        let k = self.kinematics(x);
        LGammaState { l: k.l, gamma: k.gamma }
    }

    /// Chart coordinates of an `(L, γ)` state.
    pub fn coords(&self, st: &LGammaState) -> Vec<f64> {
        ChartMap.eval(&st.to_vec())
    }

    /// Coefficient `(ÃΩ, γ)` of the area form (`A` for Veselova); equals
    /// `(L, γ) + μr²(Ω, γ)`, the momentum paired with the curvature.
    pub fn magnetic<S: Real>(&self, k: &SphereKinematics<S>) -> S {
        k.l.dot(k.gamma) + k.omega.dot(k.gamma) * self.effective().mr2()
    }

    /// `d(p₁θ₁ + p₂θ₂)` alone.
    pub fn canonical<S: Real>(q: &[S]) -> Form<S> {
        let mut f = Form::zero(4, 2);
        f.add_at(&[0, 2], -S::one());
        f.add_at(&[1, 3], -q[0].sin());
        f.add_at(&[0, 1], q[3] * q[0].cos());
        f
    }

    /// The physical `(L, γ)` field pushed to the chart.
    pub fn physical_field(&self, x: &[f64]) -> Vec<f64> {
        let st = self.state(x);
        let (ld, gd) = match self.system {
            SphereSystem::Veselova => veselova_rhs(&self.p, st.l, st.gamma),
            SphereSystem::Rubber => rubber_rhs(&self.p, st.l, st.gamma),
            SphereSystem::ReducedMarble { .. } => marble_rhs(&self.p, st.l, st.gamma),
        };
        let dir = [ld.values(), gd.values()].concat();
        directional_derivative(DiffEngine::Ad, &ChartMap, &st.to_vec(), &dir)
    }
}

/// `(L, γ) ↦ (θ, φ, −(L, e₂), (L, e₁))`.
pub struct ChartMap;

impl VectorFn for ChartMap {
    fn dim_in(&self) -> usize {
        6
    }
    fn dim_out(&self) -> usize {
        4
    }
    fn eval<S: Real>(&self, y: &[S]) -> Vec<S> {
        let l = Vec3::from_slice(&y[0..3]);
        let (theta, phi) = sphere_coords(Vec3::from_slice(&y[3..6]));
        let (e1, e2) = sphere_frame(theta, phi);
        vec![theta, phi, -l.dot(e2), l.dot(e1)]
    }
}

fn shifted<S: Real>(x: &[f64], u: &[S]) -> Vec<S> {
    x.iter().zip(u).map(|(&a, &b)| b + a).collect()
}

impl AlmostHamiltonianChart for SphereChart {
    fn dim(&self) -> usize {
        4
    }
    fn name(&self) -> String {
        match self.system {
            SphereSystem::Veselova => "veselova".into(),
            SphereSystem::Rubber => "rubber".into(),
            SphereSystem::ReducedMarble { l3 } => format!("reduced-marble(l3={l3})"),
        }
    }
    /// `Ω = d(p₁θ₁ + p₂θ₂) + (ÃΩ, γ) θ₁∧θ₂`.
    fn omega<S: Real>(&self, x: &[f64], u: &[S]) -> Form<S> {
        let q = shifted(x, u);
        let k = self.kinematics(&q);
        let mut f = Self::canonical(&q);
        f.add_at(&[0, 1], self.magnetic(&k) * q[0].sin());
        f
    }
    fn hamiltonian<S: Real>(&self, x: &[f64], u: &[S]) -> S {
        let k = self.kinematics(&shifted(x, u));
        k.omega.dot(k.l) * 0.5
    }
    /// Base dimension `m = 2`, so `f = F`.
    fn density_factor<S: Real>(&self, x: &[f64], u: &[S]) -> S {
        let g = self.gamma(x, u);
        let system = match self.system {
            SphereSystem::Veselova => System::Veselova,
            SphereSystem::Rubber => System::Rubber,
            SphereSystem::ReducedMarble { .. } => System::Marble,
        };
        measure_density(system, &self.p, g)
    }
    fn gamma<S: Real>(&self, x: &[f64], u: &[S]) -> Vec3<S> {
        let q = shifted(x, u);
        sphere_gamma(q[0], q[1])
    }
    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != 4 {
            return Err(Error::Invalid(format!("T*S² chart needs 4 coordinates, got {}", x.len())));
        }
        if x[0] < POLAR_CAP || x[0] > std::f64::consts::PI - POLAR_CAP {
            return Err(Error::ChartExit(format!("θ = {} inside a polar cap", x[0])));
        }
        Ok(())
    }
}

/// Chaplygin's ball on `T*SO(3)` in the right trivialisation: basis
/// `(ρ₁, ρ₂, ρ₃, dℓ₁, dℓ₂, dℓ₃)` with `dρ₁ = ρ₂∧ρ₃` (cyclic), spatial
/// momentum `ℓ`. Points are `(w, ℓ)` with `R = exp(ŵ)`; the local
/// displacement is `R ↦ exp(û)R`, whose `∂/∂u` at `u = 0` are the
/// right-invariant fields dual to `ρ`.
#[derive(Clone, Copy, Debug)]
pub struct MarbleSo3 {
    pub p: BodyParams,
}

impl MarbleSo3 {
    fn rotation<S: Real>(x: &[f64], u: &[S]) -> Mat3<S> {
        let base = exp_so3(Vec3::<S>::from_f64([x[0], x[1], x[2]]));
        exp_so3(Vec3::from_slice(&u[0..3])).mul(&base)
    }
    fn momentum<S: Real>(x: &[f64], u: &[S]) -> Vec3<S> {
        Vec3::new(u[3] + x[3], u[4] + x[4], u[5] + x[5])
    }
    /// Spatial angular velocity `ω = RΩ_γ(Rᵀℓ)`.
    pub fn omega_space<S: Real>(&self, x: &[f64], u: &[S]) -> Vec3<S> {
        let r = Self::rotation(x, u);
        let l = r.transpose().mul_vec(Self::momentum(x, u));
        r.mul_vec(marble_omega_of_l(&self.p, r.row(2), l))
    }

    /// `(μr²/I²)(−m₂ dm₁∧ρ₃ + m₃ dm₁∧ρ₂ − m₃ dm₂∧ρ₁ + m₁ dm₂∧ρ₃)` with `m = Iω`,
    /// for the homogeneous ball, rewritten in `dℓ`.
    pub fn homogeneous_closed_form(&self, x: &[f64]) -> Result<Form<f64>> {
        let [i1, i2, i3] = self.p.inertia;
        if i1 != i2 || i2 != i3 {
            return Err(Error::Invalid("closed form needs equal inertias".into()));
        }
        let (i, d) = (i1, self.p.mr2());
        let w = self.omega_space(x, &[0.0; 6]);
        let m = w.scale(i);
        // dm₁ = I/(I + μr²) dℓ₁, same for dm₂
        let k = i / (i + d);
        let c = d / (i * i);
        let mut f = Form::zero(6, 2);
        // dm∧ρ = −ρ∧dm
        f.add_at(&[2, 3], c * m.y * k);
        f.add_at(&[1, 3], -c * m.z * k);
        f.add_at(&[0, 4], c * m.z * k);
        f.add_at(&[2, 4], -c * m.x * k);
        Ok(f)
    }
}

impl AlmostHamiltonianChart for MarbleSo3 {
    fn dim(&self) -> usize {
        6
    }
    fn name(&self) -> String {
        "marble-so3".into()
    }
    /// `Σ dℓᵢ∧ρᵢ + ℓ₁ρ₂ρ₃ + ℓ₂ρ₃ρ₁ + ℓ₃ρ₁ρ₂ − μr²(ω₂ρ₃ρ₁ + ω₁ρ₂ρ₃)`.
    fn omega<S: Real>(&self, x: &[f64], u: &[S]) -> Form<S> {
        let l = Self::momentum(x, u);
        let w = self.omega_space(x, u);
        let d = self.p.mr2();
        let mut f = Form::zero(6, 2);
        for i in 0..3 {
            f.add_at(&[i, 3 + i], -S::one());
        }
        f.add_at(&[1, 2], l.x - w.x * d);
        f.add_at(&[0, 2], -l.y + w.y * d);
        f.add_at(&[0, 1], l.z);
        f
    }
    fn hamiltonian<S: Real>(&self, x: &[f64], u: &[S]) -> S {
        self.omega_space(x, u).dot(Self::momentum(x, u)) * 0.5
    }
    /// Chaplygin's density; there is no compression at this level, so the
    /// factor is only a trial function.
    fn density_factor<S: Real>(&self, x: &[f64], u: &[S]) -> S {
        measure_density(System::Marble, &self.p, self.gamma(x, u))
    }
    fn gamma<S: Real>(&self, x: &[f64], u: &[S]) -> Vec3<S> {
        Self::rotation(x, u).row(2)
    }
    fn basis_differentials(&self) -> Vec<Form<f64>> {
        let mut d = vec![Form::zero(6, 2); 6];
        d[0].add_at(&[1, 2], 1.0);
        d[1].add_at(&[0, 2], -1.0);
        d[2].add_at(&[0, 1], 1.0);
        d
    }
    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != 6 {
            return Err(Error::Invalid(format!("T*SO(3) chart needs 6 coordinates, got {}", x.len())));
        }
        Ok(())
    }
}

/// A chart whose density factor is replaced by an expression in `γ`.
pub struct CustomFactor<'a, C> {
    pub inner: &'a C,
    pub expr: crate::expr::Expr,
}

impl<C: AlmostHamiltonianChart> AlmostHamiltonianChart for CustomFactor<'_, C> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn name(&self) -> String {
        self.inner.name()
    }
    fn omega<S: Real>(&self, x: &[f64], u: &[S]) -> Form<S> {
        self.inner.omega(x, u)
    }
    fn hamiltonian<S: Real>(&self, x: &[f64], u: &[S]) -> S {
        self.inner.hamiltonian(x, u)
    }
    fn density_factor<S: Real>(&self, x: &[f64], u: &[S]) -> S {
        let g = self.inner.gamma(x, u);
        self.expr.eval(&[g.x, g.y, g.z])
    }
    fn gamma<S: Real>(&self, x: &[f64], u: &[S]) -> Vec3<S> {
        self.inner.gamma(x, u)
    }
    fn basis_differentials(&self) -> Vec<Form<f64>> {
        self.inner.basis_differentials()
    }
    fn check_point(&self, x: &[f64]) -> Result<()> {
        self.inner.check_point(x)
    }
}

struct ScaledForm<'a, C> {
    chart: &'a C,
    x: &'a [f64],
    factor: Factor,
}

impl<C: AlmostHamiltonianChart> crate::exterior::FormField for ScaledForm<'_, C> {
    fn dim(&self) -> usize {
        self.chart.dim()
    }
    fn degree(&self) -> usize {
        2
    }
    fn eval<S: Real>(&self, u: &[S]) -> Form<S> {
        let f = self.factor.eval(self.chart, self.x, u);
        self.chart.omega(self.x, u).scale(f)
    }
}

struct Hamiltonian<'a, C> {
    chart: &'a C,
    x: &'a [f64],
}

impl<C: AlmostHamiltonianChart> VectorFn for Hamiltonian<'_, C> {
    fn dim_in(&self) -> usize {
        self.chart.dim()
    }
    fn dim_out(&self) -> usize {
        1
    }
    fn eval<S: Real>(&self, u: &[S]) -> Vec<S> {
        vec![self.chart.hamiltonian(self.x, u)]
    }
}

/// `d(fΩ)` at `x` as a 3-form in the chart basis, including the
/// structure-relation terms of an anholonomic basis.
pub fn d_scaled_omega<C: AlmostHamiltonianChart>(engine: DiffEngine, chart: &C, x: &[f64], factor: Factor) -> Form<f64> {
    let n = chart.dim();
    let field = ScaledForm { chart, x, factor };
    let mut out = exterior_derivative(engine, &field, &vec![0.0; n]);
    let dbasis = chart.basis_differentials();
    if !dbasis.is_empty() {
        let coeff = crate::exterior::FormField::eval(&field, &vec![0.0; n]);
        for (p, ab) in Form::<f64>::multi_indices(n, 2).iter().enumerate() {
            let c = coeff.c[p];
            if c == 0.0 {
                continue;
            }
            let (a, b) = (ab[0], ab[1]);
            // d(β^a∧β^b) = dβ^a∧β^b − β^a∧dβ^b
            let t1 = dbasis[a].wedge(&Form::basis(n, &[b])).expect("same dimension");
            let t2 = Form::basis(n, &[a]).wedge(&dbasis[b]).expect("same dimension");
            out = out.add(&t1.sub(&t2).expect("same degree").scale(c)).expect("same degree");
        }
    }
    out
}

/// Solves `i_X Ω = dH` at `x` (first-slot contraction).
pub fn skew_gradient<C: AlmostHamiltonianChart>(engine: DiffEngine, chart: &C, x: &[f64]) -> Result<Vec<f64>> {
    chart.check_point(x)?;
    let u = vec![0.0; chart.dim()];
    let m = chart.omega(x, &u).to_matrix();
    let cond = m.condition_inf();
    if !(cond < SINGULAR_COND) {
        return Err(Error::SingularForm { cond });
    }
    skew_gradient_generic(engine, chart, x, &u)
}

/// `Σ_a X_a Ω_{ab} = ∂_b H`, at any scalar type (no conditioning check).
pub fn skew_gradient_generic<S: Real, C: AlmostHamiltonianChart>(
    engine: DiffEngine,
    chart: &C,
    x: &[f64],
    u: &[S],
) -> Result<Vec<S>> {
    let m = chart.omega(x, u).to_matrix();
    let dh = gradient(engine, &Hamiltonian { chart, x }, u);
    m.transpose().solve_vec(&dh)
}

/// `dH(X)` at a point; zero by antisymmetry of `Ω`.
pub fn energy_rate<C: AlmostHamiltonianChart>(engine: DiffEngine, chart: &C, x: &[f64]) -> Result<f64> {
    let xv = skew_gradient(engine, chart, x)?;
    let dh = gradient(engine, &Hamiltonian { chart, x }, &vec![0.0; chart.dim()]);
    Ok(xv.iter().zip(&dh).map(|(a, b)| a * b).sum())
}

/// Pfaffian of a 4×4 antisymmetric matrix.
fn pfaffian4<S: Real>(m: &DMat<S>) -> S {
    m[(0, 1)] * m[(2, 3)] - m[(0, 2)] * m[(1, 3)] + m[(0, 3)] * m[(1, 2)]
}

struct LiouvilleField<'a> {
    chart: &'a SphereChart,
    x: &'a [f64],
    engine: DiffEngine,
}

impl VectorFn for LiouvilleField<'_> {
    fn dim_in(&self) -> usize {
        4
    }
    fn dim_out(&self) -> usize {
        4
    }
    fn eval<S: Real>(&self, u: &[S]) -> Vec<S> {
        let f: S = self.chart.density_factor(self.x, u);
        let rho = f * f * pfaffian4(&self.chart.omega(self.x, u).to_matrix());
        match skew_gradient_generic(self.engine, self.chart, self.x, u) {
            Ok(xv) => xv.into_iter().map(|c| c * rho / f).collect(),
            Err(_) => vec![S::cst(f64::NAN); 4],
        }
    }
}

/// `div(ρ·X/f)/ρ` with `ρ` the Liouville density of `fΩ`: zero when `X/f`
/// preserves `(fΩ)²`.
pub fn liouville_residual(engine: DiffEngine, chart: &SphereChart, x: &[f64]) -> f64 {
    let u = [0.0; 4];
    let field = LiouvilleField { chart, x, engine };
    let div = crate::diff::divergence(engine, &field, &u);
    let f: f64 = chart.density_factor(x, &u);
    let rho = f * f * pfaffian4(&chart.omega(x, &u).to_matrix());
    div / rho
}

/// The skew-gradient flow in chart coordinates.
pub struct SkewFlow<'a, C> {
    pub engine: DiffEngine,
    pub chart: &'a C,
}

impl<C: AlmostHamiltonianChart> OdeSystem for SkewFlow<'_, C> {
    fn dim(&self) -> usize {
        self.chart.dim()
    }
    fn rhs(&self, _t: f64, y: &[f64]) -> Result<Vec<f64>> {
        skew_gradient(self.engine, self.chart, y)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub per_axis: usize,
    /// `[lo, hi]` per coordinate, endpoints included.
    pub bounds: Vec<[f64; 2]>,
}

impl GridSpec {
    /// `θ ∈ [0.2, π − 0.2]`, `φ ∈ [−π, π]`, `p₁, p₂ ∈ [−1, 1]`.
    pub fn sphere(per_axis: usize) -> Self {
        let pi = std::f64::consts::PI;
        Self {
            per_axis,
            bounds: vec![[0.2, pi - 0.2], [-pi, pi], [-1.0, 1.0], [-1.0, 1.0]],
        }
    }
    pub fn len(&self) -> usize {
        self.per_axis.pow(self.bounds.len() as u32)
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn validate(&self) -> Result<()> {
        if self.per_axis < 2 {
            return Err(Error::Invalid("grid needs at least 2 points per axis".into()));
        }
        if self.bounds.iter().any(|b| !(b[0].is_finite() && b[1].is_finite() && b[0] < b[1])) {
            return Err(Error::Invalid("grid bounds must be finite with lo < hi".into()));
        }
        Ok(())
    }
    pub fn points(&self) -> Vec<Vec<f64>> {
        let (n, d) = (self.per_axis, self.bounds.len());
        (0..self.len())
            .map(|mut k| {
                (0..d)
                    .map(|a| {
                        let i = k % n;
                        k /= n;
                        let [lo, hi] = self.bounds[a];
                        lo + (hi - lo) * i as f64 / (n - 1) as f64
                    })
                    .collect()
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ConformallySymplectic,
    AffineHamiltonizableCandidate,
    Obstructed,
    /// Nonzero but not above the noise threshold.
    Inconclusive,
}

impl Verdict {
    pub fn describe(&self) -> &'static str {
        match self {
            Verdict::ConformallySymplectic => "conformally symplectic",
            Verdict::AffineHamiltonizableCandidate => "affine-Hamiltonizable candidate",
            Verdict::Obstructed => "obstructed",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ObstructionReport {
    pub system: String,
    pub factor: Factor,
    pub engine: &'static str,
    pub points: usize,
    /// Max coefficient of `d(fΩ)`, with `f` scaled to max 1 over the points.
    pub max_d_f_omega: f64,
    /// Max coefficient of `i_X d(fΩ)`, same normalisation.
    pub max_ix_d_f_omega: f64,
    /// Min `|det Ω|` over the points.
    pub min_abs_det: f64,
    pub noise_floor: Option<f64>,
    pub zero_tol: f64,
    /// Level a nonzero obstruction must exceed: `max(zero_tol, 10³·floor)`.
    pub nonzero_threshold: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Copy, Debug)]
struct PointValues {
    d: f64,
    ix: f64,
    det: f64,
    f: f64,
}

fn point_values<C: AlmostHamiltonianChart>(engine: DiffEngine, chart: &C, x: &[f64], factor: Factor) -> Result<PointValues> {
    let u = vec![0.0; chart.dim()];
    let f: f64 = factor.eval(chart, x, &u);
    if !(f > 0.0) {
        return Err(Error::Invalid(format!("conformal factor {f} is not positive at {x:?}")));
    }
    let d3 = d_scaled_omega(engine, chart, x, factor);
    let xv = skew_gradient(engine, chart, x)?;
    let ix = d3.interior(&xv)?;
    Ok(PointValues {
        d: d3.max_abs(),
        ix: ix.max_abs(),
        det: chart.omega(x, &u).to_matrix().det().abs(),
        f,
    })
}

/// Evaluates `d(fΩ)` and `i_X d(fΩ)` over the points (in parallel).
pub fn conformal_obstruction<C: AlmostHamiltonianChart>(
    engine: DiffEngine,
    chart: &C,
    factor: Factor,
    points: &[Vec<f64>],
    noise_floor: Option<f64>,
) -> Result<ObstructionReport> {
    if points.is_empty() {
        return Err(Error::Invalid("empty sample grid".into()));
    }
    for x in points {
        chart.check_point(x)?;
    }
    let vals: Vec<PointValues> = points
        .par_iter()
        .map(|x| point_values(engine, chart, x, factor))
        .collect::<Result<_>>()?;
    let fmax = vals.iter().fold(0.0f64, |m, v| m.max(v.f));
    let max_d = vals.iter().fold(0.0f64, |m, v| m.max(v.d)) / fmax;
    let max_ix = vals.iter().fold(0.0f64, |m, v| m.max(v.ix)) / fmax;
    let min_det = vals.iter().fold(f64::INFINITY, |m, v| m.min(v.det));
    let zero_tol = CONFORMAL_TOL;
    let nonzero_threshold = zero_tol.max(NOISE_FACTOR * noise_floor.unwrap_or(0.0));
    let verdict = if max_d < zero_tol {
        Verdict::ConformallySymplectic
    } else if max_ix < zero_tol {
        Verdict::AffineHamiltonizableCandidate
    } else if max_ix > nonzero_threshold {
        Verdict::Obstructed
    } else {
        Verdict::Inconclusive
    };
    Ok(ObstructionReport {
        system: chart.name(),
        factor,
        engine: engine.name(),
        points: points.len(),
        max_d_f_omega: max_d,
        max_ix_d_f_omega: max_ix,
        min_abs_det: min_det,
        noise_floor,
        zero_tol,
        nonzero_threshold,
        verdict,
    })
}

/// Max `|d(fΩ)|` of the Veselova conformal test over the same points and
/// engine: the reference level below which residuals are round-off.
pub fn veselova_noise_floor(engine: DiffEngine, p: &BodyParams, points: &[Vec<f64>]) -> Result<f64> {
    Ok(conformal_obstruction(engine, &SphereChart::veselova(*p), Factor::Density, points, None)?.max_d_f_omega)
}
