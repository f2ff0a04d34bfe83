//! SO(3) utilities, Poisson vector and the horizontal lift of S² velocities.

use crate::error::{Error, Result};
use crate::linalg::{Mat3, Vec3};
use crate::scalar::Real;

pub type Rot3<S> = Mat3<S>;

/// Tolerance for the unit-norm and tangency preconditions of the lift.
pub const LIFT_TOL: f64 = 1e-9;

/// `hat(v)·w = v × w`.
pub fn hat<S: Real>(v: Vec3<S>) -> Mat3<S> {
    let z = S::zero();
    Mat3 {
        m: [[z, -v.z, v.y], [v.z, z, -v.x], [-v.y, v.x, z]],
    }
}

/// Inverse of `hat` on skew matrices (antisymmetric part is used).
pub fn unhat<S: Real>(m: &Mat3<S>) -> Vec3<S> {
    Vec3::new(
        (m.m[2][1] - m.m[1][2]) * 0.5,
        (m.m[0][2] - m.m[2][0]) * 0.5,
        (m.m[1][0] - m.m[0][1]) * 0.5,
    )
}

/// `γ = Rᵀ k̂`, the third row of `R`.
pub fn poisson_vector<S: Real>(r: &Rot3<S>) -> Vec3<S> {
    r.row(2)
}

/// Rotation by `phi` about the vertical axis.
pub fn rot_z<S: Real>(phi: S) -> Rot3<S> {
    let (c, s) = (phi.cos(), phi.sin());
    let z = S::zero();
    let o = S::one();
    Mat3 {
        m: [[c, -s, z], [s, c, z], [z, z, o]],
    }
}

pub fn rot_x<S: Real>(theta: S) -> Rot3<S> {
    let (c, s) = (theta.cos(), theta.sin());
    let z = S::zero();
    let o = S::one();
    Mat3 {
        m: [[o, z, z], [z, c, -s], [z, s, c]],
    }
}

/// `exp(hat(w))` via Rodrigues' formula.
pub fn exp_so3<S: Real>(w: Vec3<S>) -> Rot3<S> {
    let th2 = w.norm2();
    let k = hat(w);
    let k2 = k.mul(&k);
    let (a, b) = if th2.value() < 1e-12 {
        // series: sinθ/θ ≈ 1 − θ²/6, (1−cosθ)/θ² ≈ ½ − θ²/24
        (S::one() - th2 / 6.0, S::cst(0.5) - th2 / 24.0)
    } else {
        let th = th2.sqrt();
        (th.sin() / th, (S::one() - th.cos()) / th2)
    };
    Mat3::identity().add(&k.scale(a)).add(&k2.scale(b))
}

/// Body angular velocity of the horizontal lift of `γ̇` at `γ`: `γ̇ × γ`.
pub fn horizontal_lift_so3<S: Real>(gamma: Vec3<S>, gamma_dot: Vec3<S>) -> Result<Vec3<S>> {
    let unit = (gamma.norm2().value() - 1.0).abs();
    if unit > LIFT_TOL {
        return Err(Error::Constraint {
            what: "|γ| = 1",
            residual: unit,
            tol: LIFT_TOL,
        });
    }
    let tang = gamma.dot(gamma_dot).value().abs();
    if tang > LIFT_TOL {
        return Err(Error::Constraint {
            what: "(γ, γ̇) = 0",
            residual: tang,
            tol: LIFT_TOL,
        });
    }
    Ok(gamma_dot.cross(gamma))
}

/// Max entry of `RᵀR − I` and `|det R − 1|`.
pub fn orthogonality_error(r: &Rot3<f64>) -> f64 {
    let g = r.transpose().mul(r);
    let mut e: f64 = (r.det() - 1.0).abs();
    for i in 0..3 {
        for j in 0..3 {
            let id = if i == j { 1.0 } else { 0.0 };
            e = e.max((g.m[i][j] - id).abs());
        }
    }
    e
}

/// Closest rotation in the Frobenius norm (polar factor).
pub fn project_to_so3(r: &Mat3<f64>) -> Rot3<f64> {
    let m = nalgebra::Matrix3::from_fn(|i, j| r.m[i][j]);
    let svd = m.svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut p = u * vt;
    if p.determinant() < 0.0 {
        let mut u2 = u;
        u2.set_column(2, &(-u.column(2)));
        p = u2 * vt;
    }
    Mat3::from_f64([
        [p[(0, 0)], p[(0, 1)], p[(0, 2)]],
        [p[(1, 0)], p[(1, 1)], p[(1, 2)]],
        [p[(2, 0)], p[(2, 1)], p[(2, 2)]],
    ])
}

/// Classical z-x-z Euler angles `R = Rz(ψ)·Rx(θ)·Rz(φ)`.
pub fn euler_zxz<S: Real>(psi: S, theta: S, phi: S) -> Rot3<S> {
    rot_z(psi).mul(&rot_x(theta)).mul(&rot_z(phi))
}
