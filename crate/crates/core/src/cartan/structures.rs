//! Catalogue of adapted coframes: the rolling penny, the Engel normal form
//! with the flat metric, conformal rescalings and an integrable example.

use super::{Distribution, NhStructure};
use crate::exterior::{CoframeField, MetricField};
use crate::linalg::DMat;
use crate::scalar::Real;
use serde::{Deserialize, Serialize};

/// Mass `m`, radius `a`, moments of inertia `i` (rolling axis) and `j` (spin axis).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PennyParams {
    pub m: f64,
    pub a: f64,
    pub i: f64,
    pub j: f64,
}

impl Default for PennyParams {
    fn default() -> Self {
        Self {
            m: 2.0,
            a: 1.0,
            i: 2.0,
            j: 2.0,
        }
    }
}

impl PennyParams {
    pub fn validate(&self) -> crate::Result<()> {
        for (name, v) in [("m", self.m), ("a", self.a), ("I", self.i), ("J", self.j)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(crate::Error::Invalid(format!("penny parameter {name} = {v} must be positive")));
            }
        }
        Ok(())
    }
    /// `√((ma² + I)/2)`, the norm of `dφ` on the roll direction.
    pub fn k_roll(&self) -> f64 {
        ((self.m * self.a * self.a + self.i) / 2.0).sqrt()
    }
    /// `√(J/2)`.
    pub fn k_spin(&self) -> f64 {
        (self.j / 2.0).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PennyVariant {
    /// `η³ = √(m/2)(−sinθ dx + cosθ dy)`.
    Orthonormal,
    /// `η³` rescaled so that `dη³ = η¹∧η² + …`.
    Scaled,
}

/// Vertical rolling disk in `q = (x, y, θ, φ)` with kinetic energy
/// `(m/2)(ẋ² + ẏ²) + (J/2)θ̇² + (I/2)φ̇²` and constraints
/// `ẋ = aφ̇ cosθ`, `ẏ = aφ̇ sinθ`.
#[derive(Clone, Copy, Debug)]
pub struct Penny {
    pub params: PennyParams,
    pub variant: PennyVariant,
}

impl Penny {
    pub fn new(params: PennyParams) -> Self {
        Self {
            params,
            variant: PennyVariant::Orthonormal,
        }
    }
    pub fn scaled(params: PennyParams) -> Self {
        Self {
            params,
            variant: PennyVariant::Scaled,
        }
    }
    fn row3_scale(&self) -> f64 {
        let p = &self.params;
        match self.variant {
            PennyVariant::Orthonormal => (p.m / 2.0).sqrt(),
            PennyVariant::Scaled => p.k_roll() * p.k_spin() / p.a,
        }
    }
}

impl CoframeField for Penny {
    fn dim(&self) -> usize {
        4
    }
    fn coframe<S: Real>(&self, q: &[S]) -> DMat<S> {
        let p = &self.params;
        let (s, c) = (q[2].sin(), q[2].cos());
        let z = S::zero();
        let k4 = (p.m / 2.0).sqrt();
        let k3 = self.row3_scale();
        DMat::from_rows(&[
            vec![z, z, z, S::cst(p.k_roll())],
            vec![z, z, S::cst(p.k_spin()), z],
            vec![-s * k3, c * k3, z, z],
            vec![c * k4, s * k4, z, S::cst(-k4 * p.a)],
        ])
    }
}

impl NhStructure for Penny {
    fn rank(&self) -> usize {
        2
    }
    fn derived_rows(&self) -> usize {
        1
    }
    fn name(&self) -> String {
        "penny".into()
    }
    fn sample_box(&self) -> Vec<(f64, f64)> {
        vec![(-3.0, 3.0), (-3.0, 3.0), (-3.2, 3.2), (-3.2, 3.2)]
    }
}

/// The penny kinetic energy as a Riemannian metric in `(x, y, θ, φ)`.
pub struct PennyMetric(pub PennyParams);

impl MetricField for PennyMetric {
    fn metric<S: Real>(&self, _q: &[S]) -> DMat<S> {
        let p = &self.0;
        let d = [p.m / 2.0, p.m / 2.0, p.j / 2.0, p.i / 2.0];
        let mut g = DMat::zeros(4, 4);
        for (k, v) in d.iter().enumerate() {
            g[(k, k)] = S::cst(*v);
        }
        g
    }
}

/// Metric multiplied by `scale·(1 + eps·sin q₀)`: every row of the coframe
/// is multiplied by the square root of that factor.
#[derive(Clone, Copy, Debug)]
pub struct ConformallyScaled<C> {
    pub inner: C,
    pub scale: f64,
    pub eps: f64,
}

impl<C> ConformallyScaled<C> {
    /// The perturbation `1 + eps·sin x`.
    pub fn perturbed(inner: C, eps: f64) -> Self {
        Self {
            inner,
            scale: 1.0,
            eps,
        }
    }
    pub fn rescaled(inner: C, scale: f64) -> Self {
        Self {
            inner,
            scale,
            eps: 0.0,
        }
    }
}

impl<C: CoframeField> CoframeField for ConformallyScaled<C> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn coframe<S: Real>(&self, q: &[S]) -> DMat<S> {
        let f = (q[0].sin() * self.eps + 1.0) * self.scale;
        self.inner.coframe(q).scale(f.sqrt())
    }
    fn orthonormal(&self) -> bool {
        self.inner.orthonormal()
    }
}

impl<C: NhStructure> NhStructure for ConformallyScaled<C> {
    fn rank(&self) -> usize {
        self.inner.rank()
    }
    fn derived_rows(&self) -> usize {
        self.inner.derived_rows()
    }
    fn name(&self) -> String {
        if self.eps != 0.0 {
            format!("perturbed-{}", self.inner.name())
        } else {
            format!("rescaled-{}", self.inner.name())
        }
    }
    fn sample_box(&self) -> Vec<(f64, f64)> {
        self.inner.sample_box()
    }
}

/// `span{∂_w, ∂_x + w∂_y + y∂_z}` in `(x, y, z, w)`.
#[derive(Clone, Copy, Debug)]
pub struct EngelNormalForm;

impl Distribution for EngelNormalForm {
    fn dim(&self) -> usize {
        4
    }
    fn rank(&self) -> usize {
        2
    }
    fn fields<S: Real>(&self, q: &[S]) -> Vec<S> {
        let (o, z) = (S::one(), S::zero());
        vec![z, z, z, o, o, q[3], q[1], z]
    }
}

/// Adapted coframe of the Engel normal form for the flat metric on `R⁴`:
/// `η¹ = dw`, `η² = (dx + w dy + y dz)/√(1 + w² + y²)`,
/// `η³ = dy − w dx`, `η⁴ = dz − y dx`.
#[derive(Clone, Copy, Debug)]
pub struct EngelFlat;

impl CoframeField for EngelFlat {
    fn dim(&self) -> usize {
        4
    }
    fn coframe<S: Real>(&self, q: &[S]) -> DMat<S> {
        let (y, w) = (q[1], q[3]);
        let (o, z) = (S::one(), S::zero());
        let s = (y * y + w * w + 1.0).sqrt();
        DMat::from_rows(&[
            vec![z, z, z, o],
            vec![o / s, w / s, y / s, z],
            vec![-w, o, z, z],
            vec![-y, z, o, z],
        ])
    }
}

impl NhStructure for EngelFlat {
    fn rank(&self) -> usize {
        2
    }
    fn derived_rows(&self) -> usize {
        1
    }
    fn name(&self) -> String {
        "engel-normal-form".into()
    }
}

/// `span{∂_x, ∂_y}` in `R⁴` with the coordinate coframe.
#[derive(Clone, Copy, Debug)]
pub struct Integrable;

impl CoframeField for Integrable {
    fn dim(&self) -> usize {
        4
    }
    fn coframe<S: Real>(&self, _q: &[S]) -> DMat<S> {
        DMat::identity(4)
    }
}

impl NhStructure for Integrable {
    fn rank(&self) -> usize {
        2
    }
    fn derived_rows(&self) -> usize {
        2
    }
    fn name(&self) -> String {
        "integrable".into()
    }
}
