//! Coordinate charts: the spherical chart on S², its cotangent bundle, and
//! validated chart points.

use crate::error::{Error, Result};
use crate::linalg::{Mat3, Vec3};
use crate::scalar::Real;
use serde::{Deserialize, Serialize};

/// Width of the polar caps excluded from the spherical chart.
pub const POLAR_CAP: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChartKind {
    /// `(θ, φ)` on S².
    Sphere,
    /// `(θ, φ, p₁, p₂)` on T*S², momenta in the orthonormal coframe.
    SphereCotangent,
    /// z-x-z Euler angles `(ψ, θ, φ)` on SO(3).
    Euler,
    /// `(ψ, θ, φ, ℓ₁, ℓ₂, ℓ₃)` on T*SO(3) in the right trivialisation.
    EulerCotangent,
    /// Flat coordinates with no domain restriction.
    Euclidean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub chart: ChartKind,
    pub coords: Vec<f64>,
}

impl ChartPoint {
    pub fn new(chart: ChartKind, coords: Vec<f64>) -> Result<Self> {
        let need = match chart {
            ChartKind::Sphere => Some(2),
            ChartKind::SphereCotangent => Some(4),
            ChartKind::Euler => Some(3),
            ChartKind::EulerCotangent => Some(6),
            ChartKind::Euclidean => None,
        };
        if let Some(n) = need {
            if coords.len() != n {
                return Err(Error::Invalid(format!(
                    "{chart:?} chart needs {n} coordinates, got {}",
                    coords.len()
                )));
            }
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid("non-finite chart coordinate".into()));
        }
        match chart {
            ChartKind::Sphere | ChartKind::SphereCotangent => check_polar(coords[0])?,
            // θ = 0, π is gimbal lock for z-x-z angles
            ChartKind::Euler | ChartKind::EulerCotangent => check_polar(coords[1])?,
            ChartKind::Euclidean => {}
        }
        Ok(Self { chart, coords })
    }

    pub fn euclidean(coords: Vec<f64>) -> Result<Self> {
        Self::new(ChartKind::Euclidean, coords)
    }
}

fn check_polar(theta: f64) -> Result<()> {
    if theta < POLAR_CAP || theta > std::f64::consts::PI - POLAR_CAP {
        return Err(Error::ChartExit(format!(
            "polar angle {theta} is inside an excluded cap of width {POLAR_CAP}"
        )));
    }
    Ok(())
}

/// `γ(θ, φ) = (sinθ cosφ, sinθ sinφ, cosθ)`.
pub fn sphere_gamma<S: Real>(theta: S, phi: S) -> Vec3<S> {
    let st = theta.sin();
    Vec3::new(st * phi.cos(), st * phi.sin(), theta.cos())
}

/// Orthonormal frame `e₁ = ∂_θ γ`, `e₂ = (1/sinθ) ∂_φ γ`; `e₁ × e₂ = γ`.
pub fn sphere_frame<S: Real>(theta: S, phi: S) -> (Vec3<S>, Vec3<S>) {
    let (ct, st) = (theta.cos(), theta.sin());
    let (cp, sp) = (phi.cos(), phi.sin());
    (
        Vec3::new(ct * cp, ct * sp, -st),
        Vec3::new(-sp, cp, S::zero()),
    )
}

/// `R(γ)` with rows `e₁, e₂, γ`; a rotation whose Poisson vector is `γ`.
pub fn sphere_rotation<S: Real>(theta: S, phi: S) -> Mat3<S> {
    let (e1, e2) = sphere_frame(theta, phi);
    Mat3::from_rows(e1, e2, sphere_gamma(theta, phi))
}

/// Inverse chart map `γ ↦ (θ, φ)`, differentiable away from the poles.
pub fn sphere_coords<S: Real>(g: Vec3<S>) -> (S, S) {
    let rho = (g.x * g.x + g.y * g.y).sqrt();
    (rho.atan2(g.z), g.y.atan2(g.x))
}
