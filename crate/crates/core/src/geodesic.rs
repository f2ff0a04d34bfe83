//! Nonholonomic geodesics: `q̇ = Σ v_i e_i`, `v̇_i = −Σ_j v_j ω_ij(q̇)` with
//! the horizontal block of the Levi-Civita connection of an adapted
//! orthonormal coframe.

use crate::cartan::NhStructure;
use crate::diff::DiffEngine;
use crate::error::{Error, Result};
use crate::exterior::{check_coframe, frame, levi_civita_connection};
use crate::ode::{integrate, IntegratorConfig, OdeSystem, Trajectory};
use serde::Serialize;

/// Horizontality `|η^ν(q̇)|` allowed at an accepted step.
pub const HORIZONTALITY_TOL: f64 = 1e-10;

/// `(q̇, v̇)` at `(q, v)`.
pub fn nh_geodesic_rhs<C: NhStructure>(
    engine: DiffEngine,
    s: &C,
    q: &[f64],
    v: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (n, r) = (s.dim(), s.rank());
    if v.len() != r {
        return Err(Error::Invalid(format!("{} quasivelocities for a rank-{r} structure", v.len())));
    }
    check_coframe(s, q)?;
    let b = frame(s, q);
    let qdot: Vec<f64> = (0..n)
        .map(|a| (0..r).map(|i| v[i] * b[(a, i)]).sum())
        .collect();
    let conn = levi_civita_connection(engine, s, q)?;
    // η(q̇) = (v, 0) by construction
    let mut eta_qdot = v.to_vec();
    eta_qdot.resize(n, 0.0);
    let vdot = (0..r)
        .map(|i| -(0..r).map(|j| v[j] * conn.omega_on(i, j, &eta_qdot)).sum::<f64>())
        .collect();
    Ok((qdot, vdot))
}

/// Max `|η^ν(q̇)|` over annihilator rows.
pub fn horizontality_residual<C: NhStructure>(s: &C, q: &[f64], qdot: &[f64]) -> f64 {
    let a = s.coframe(q);
    (s.rank()..s.dim())
        .map(|nu| a.row(nu).iter().zip(qdot).map(|(x, y)| x * y).sum::<f64>().abs())
        .fold(0.0, f64::max)
}

/// The geodesic flow on the state `(q, v)`.
pub struct NhGeodesic<'a, C> {
    pub engine: DiffEngine,
    pub s: &'a C,
}

impl<C: NhStructure> OdeSystem for NhGeodesic<'_, C> {
    fn dim(&self) -> usize {
        self.s.dim() + self.s.rank()
    }
    fn rhs(&self, _t: f64, y: &[f64]) -> Result<Vec<f64>> {
        let n = self.s.dim();
        let (mut qd, vd) = nh_geodesic_rhs(self.engine, self.s, &y[..n], &y[n..])?;
        qd.extend(vd);
        Ok(qd)
    }
    fn check(&self, t: f64, y: &[f64]) -> Result<()> {
        let n = self.s.dim();
        let (qd, _) = nh_geodesic_rhs(self.engine, self.s, &y[..n], &y[n..])?;
        let res = horizontality_residual(self.s, &y[..n], &qd);
        if res > HORIZONTALITY_TOL {
            return Err(Error::Integration {
                t,
                reason: format!("horizontality residual {res:.3e}"),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GeodesicSummary {
    pub energy_drift: f64,
    /// Max `|v_i(t) − v_i(0)|`.
    pub quasivelocity_drift: Vec<f64>,
}

pub fn kinetic_energy(v: &[f64]) -> f64 {
    0.5 * v.iter().map(|x| x * x).sum::<f64>()
}

/// Integrates a geodesic from `(q0, v0)`; state rows are `(q, v)`.
pub fn integrate_geodesic<C: NhStructure>(
    engine: DiffEngine,
    s: &C,
    q0: &[f64],
    v0: &[f64],
    cfg: &IntegratorConfig,
) -> Result<(Trajectory, GeodesicSummary)> {
    let n = s.dim();
    if q0.len() != n || v0.len() != s.rank() {
        return Err(Error::Invalid("initial state has the wrong dimension".into()));
    }
    let mut y0 = q0.to_vec();
    y0.extend_from_slice(v0);
    let traj = integrate(&NhGeodesic { engine, s }, &y0, cfg)?;
    let energy_drift = crate::ode::drift(&traj, |y| kinetic_energy(&y[n..]));
    let quasivelocity_drift = (0..s.rank())
        .map(|i| crate::ode::drift(&traj, |y| y[n + i]))
        .collect();
    Ok((
        traj,
        GeodesicSummary {
            energy_drift,
            quasivelocity_drift,
        },
    ))
}

/// Largest distance of the points from the line through the first point and
/// the point farthest from it; zero for fewer than two distinct points.
pub fn collinearity_residual(points: &[[f64; 2]]) -> f64 {
    let Some(p0) = points.first() else {
        return 0.0;
    };
    let far = points
        .iter()
        .max_by(|a, b| {
            let da = (a[0] - p0[0]).hypot(a[1] - p0[1]);
            let db = (b[0] - p0[0]).hypot(b[1] - p0[1]);
            da.total_cmp(&db)
        })
        .unwrap();
    let (dx, dy) = (far[0] - p0[0], far[1] - p0[1]);
    let len = dx.hypot(dy);
    if len == 0.0 {
        return 0.0;
    }
    points
        .iter()
        .map(|p| ((p[0] - p0[0]) * dy - (p[1] - p0[1]) * dx).abs() / len)
        .fold(0.0, f64::max)
}
