//! Differentiation engines: forward-mode dual numbers or central differences.

use crate::linalg::DMat;
use crate::scalar::{seed, seed_axis, Dual, Real};
use serde::{Deserialize, Serialize};

pub const DEFAULT_FD_STEP: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DiffEngine {
    Ad,
    Fd { h: f64 },
}

impl Default for DiffEngine {
    fn default() -> Self {
        DiffEngine::Ad
    }
}

impl DiffEngine {
    pub fn fd() -> Self {
        DiffEngine::Fd { h: DEFAULT_FD_STEP }
    }

    /// Reads `NH_ENGINE` (`ad` or `fd`); anything else falls back to `None`.
    pub fn from_env() -> Option<Self> {
        match std::env::var("NH_ENGINE").ok()?.to_ascii_lowercase().as_str() {
            "ad" => Some(DiffEngine::Ad),
            "fd" => Some(DiffEngine::fd()),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DiffEngine::Ad => "ad",
            DiffEngine::Fd { .. } => "fd",
        }
    }
}

/// A smooth map `R^n → R^m` that can be evaluated at any scalar type.
pub trait VectorFn {
    fn dim_in(&self) -> usize;
    fn dim_out(&self) -> usize;
    fn eval<S: Real>(&self, q: &[S]) -> Vec<S>;
}

impl<T: VectorFn> VectorFn for &T {
    fn dim_in(&self) -> usize {
        (*self).dim_in()
    }
    fn dim_out(&self) -> usize {
        (*self).dim_out()
    }
    fn eval<S: Real>(&self, q: &[S]) -> Vec<S> {
        (*self).eval(q)
    }
}

/// Jacobian `J[i][a] = ∂f_i/∂q_a`.
pub fn jacobian<S: Real, F: VectorFn>(engine: DiffEngine, f: &F, q: &[S]) -> DMat<S> {
    let n = q.len();
    let m = f.dim_out();
    let mut jac = DMat::zeros(m, n);
    for a in 0..n {
        let col = match engine {
            DiffEngine::Ad => f
                .eval::<Dual<S>>(&seed_axis(q, a))
                .into_iter()
                .map(|d| d.eps)
                .collect::<Vec<S>>(),
            DiffEngine::Fd { h } => {
                let mut qp = q.to_vec();
                let mut qm = q.to_vec();
                qp[a] = qp[a] + h;
                qm[a] = qm[a] - h;
                let fp = f.eval(&qp);
                let fm = f.eval(&qm);
                fp.iter()
                    .zip(&fm)
                    .map(|(&p, &m)| (p - m) / (2.0 * h))
                    .collect()
            }
        };
        for i in 0..m {
            jac[(i, a)] = col[i];
        }
    }
    jac
}

/// Derivative of `f` at `q` along `dir`.
pub fn directional_derivative<S: Real, F: VectorFn>(
    engine: DiffEngine,
    f: &F,
    q: &[S],
    dir: &[S],
) -> Vec<S> {
    match engine {
        DiffEngine::Ad => f
            .eval::<Dual<S>>(&seed(q, dir))
            .into_iter()
            .map(|d| d.eps)
            .collect(),
        DiffEngine::Fd { h } => {
            let qp: Vec<S> = q.iter().zip(dir).map(|(&a, &d)| a + d * h).collect();
            let qm: Vec<S> = q.iter().zip(dir).map(|(&a, &d)| a - d * h).collect();
            f.eval(&qp)
                .iter()
                .zip(&f.eval(&qm))
                .map(|(&p, &m)| (p - m) / (2.0 * h))
                .collect()
        }
    }
}

/// Gradient of a scalar-valued map (first output component).
pub fn gradient<S: Real, F: VectorFn>(engine: DiffEngine, f: &F, q: &[S]) -> Vec<S> {
    jacobian(engine, f, q).row(0)
}

/// Divergence `Σ ∂_a f_a` of a vector field `R^n → R^n`.
pub fn divergence<S: Real, F: VectorFn>(engine: DiffEngine, f: &F, q: &[S]) -> S {
    let jac = jacobian(engine, f, q);
    let mut acc = S::zero();
    for a in 0..q.len() {
        acc += jac[(a, a)];
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Poly;
    impl VectorFn for Poly {
        fn dim_in(&self) -> usize {
            2
        }
        fn dim_out(&self) -> usize {
            2
        }
        fn eval<S: Real>(&self, q: &[S]) -> Vec<S> {
            vec![q[0] * q[0] * q[1], q[1].sin() + q[0]]
        }
    }

    #[test]
    fn ad_jacobian_is_exact() {
        let j = jacobian(DiffEngine::Ad, &Poly, &[1.5, 0.3]);
        assert_eq!(j[(0, 0)], 2.0 * 1.5 * 0.3);
        assert_eq!(j[(0, 1)], 1.5 * 1.5);
        assert_eq!(j[(1, 0)], 1.0);
        assert!((j[(1, 1)] - 0.3f64.cos()).abs() < 1e-16);
    }

    #[test]
    fn fd_and_ad_agree_to_step_squared() {
        let q = [0.4, -1.2];
        let dir = [0.6, 0.8];
        let a = directional_derivative(DiffEngine::Ad, &Poly, &q, &dir);
        let f = directional_derivative(DiffEngine::fd(), &Poly, &q, &dir);
        for (x, y) in a.iter().zip(&f) {
            assert!((x - y).abs() < 10.0 * DEFAULT_FD_STEP * DEFAULT_FD_STEP);
        }
    }
}
