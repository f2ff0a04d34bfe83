//! Concrete coframe fields on SO(3), S² and T*SO(3).

use crate::exterior::CoframeField;
use crate::linalg::{DMat, Mat3};
use crate::scalar::{seed_axis, Dual, Real};
use crate::so3::{euler_zxz, unhat};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// Left-invariant `λ` with `hat(λ) = Rᵀ dR` (body angular velocity).
    Left,
    /// Right-invariant `ρ` with `hat(ρ) = dR Rᵀ` (space angular velocity).
    Right,
}

/// Invariant coframe on SO(3) in z-x-z Euler angles `(ψ, θ, φ)`.
#[derive(Clone, Copy, Debug)]
pub struct So3Coframe {
    pub side: Side,
}

fn rot_of<S: Real>(q: &[S]) -> Mat3<S> {
    euler_zxz(q[0], q[1], q[2])
}

/// Column `a` of the coframe matrix is `unhat(∂_a R · Rᵀ)` (or `Rᵀ ∂_a R`).
pub fn so3_coframe_matrix<S: Real>(side: Side, q: &[S]) -> DMat<S> {
    let r = rot_of(q);
    let mut a = DMat::zeros(3, 3);
    for k in 0..3 {
        let rd = rot_of::<Dual<S>>(&seed_axis(q, k));
        let mut dr = Mat3::<S>::zero();
        for i in 0..3 {
            for j in 0..3 {
                dr.m[i][j] = rd.m[i][j].eps;
            }
        }
        let w = match side {
            Side::Right => unhat(&dr.mul(&r.transpose())),
            Side::Left => unhat(&r.transpose().mul(&dr)),
        };
        for i in 0..3 {
            a[(i, k)] = w.get(i);
        }
    }
    a
}

impl CoframeField for So3Coframe {
    fn dim(&self) -> usize {
        3
    }
    fn coframe<S: Real>(&self, q: &[S]) -> DMat<S> {
        so3_coframe_matrix(self.side, q)
    }
}

/// `θ₁ = dθ`, `θ₂ = sinθ dφ` on S² in the chart `(θ, φ)`.
#[derive(Clone, Copy, Debug)]
pub struct SphereCoframe;

impl CoframeField for SphereCoframe {
    fn dim(&self) -> usize {
        2
    }
    fn coframe<S: Real>(&self, q: &[S]) -> DMat<S> {
        DMat::from_rows(&[vec![S::one(), S::zero()], vec![S::zero(), q[0].sin()]])
    }
}

/// Right-invariant coframe on SO(3) together with `dℓ` on the fibre,
/// chart `(ψ, θ, φ, ℓ₁, ℓ₂, ℓ₃)`.
#[derive(Clone, Copy, Debug)]
pub struct CotangentSo3Coframe;

impl CoframeField for CotangentSo3Coframe {
    fn dim(&self) -> usize {
        6
    }
    fn coframe<S: Real>(&self, q: &[S]) -> DMat<S> {
        let r = so3_coframe_matrix(Side::Right, &q[..3]);
        let mut a = DMat::zeros(6, 6);
        for i in 0..3 {
            for j in 0..3 {
                a[(i, j)] = r[(i, j)];
            }
            a[(3 + i, 3 + i)] = S::one();
        }
        a
    }
}
