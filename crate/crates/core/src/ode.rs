//! Explicit Runge-Kutta integrators: classical RK4 on a fixed grid and
//! Dormand-Prince 5(4) with step control, both sampled on the `dt` grid.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// An autonomous or time-dependent first-order system `y' = f(t, y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64]) -> Result<Vec<f64>>;
    /// Projection applied after every accepted step (e.g. back to a constraint manifold).
    fn after_step(&self, _y: &mut [f64]) {}
    /// Validity check at every accepted step.
    fn check(&self, _t: f64, _y: &[f64]) -> Result<()> {
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Rk4,
    #[serde(alias = "dopri45")]
    Rk45Adaptive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub method: Method,
    pub dt: f64,
    pub t_end: f64,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::Rk4,
            dt: 1e-3,
            t_end: 10.0,
            rtol: 1e-12,
            atol: 1e-14,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Invalid(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::Invalid(format!("t_end = {} must be non-negative", self.t_end)));
        }
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::Invalid("tolerances must be positive".into()));
        }
        Ok(())
    }

    /// Output times `0, dt, 2dt, …, t_end`; the last interval may be shorter.
    pub fn sample_times(&self) -> Vec<f64> {
        let ratio = self.t_end / self.dt;
        // absorb round-off in t_end/dt
        let n = if (ratio - ratio.round()).abs() < 1e-9 {
            ratio.round() as usize
        } else {
            ratio.ceil() as usize
        };
        let mut ts: Vec<f64> = (0..n).map(|k| k as f64 * self.dt).collect();
        ts.push(self.t_end);
        ts
    }
}

#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub y: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }
    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
    pub fn last(&self) -> &[f64] {
        self.y.last().map(|v| v.as_slice()).unwrap_or(&[])
    }
}

fn axpy(y: &[f64], h: f64, ks: &[(&[f64], f64)]) -> Vec<f64> {
    let mut out = y.to_vec();
    for (k, c) in ks {
        if *c != 0.0 {
            for (o, &x) in out.iter_mut().zip(k.iter()) {
                *o += h * c * x;
            }
        }
    }
    out
}

fn finite(t: f64, y: &[f64]) -> Result<()> {
    if y.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Integration {
            t,
            reason: "state is not finite".into(),
        })
    }
}

pub fn rk4_step<F: OdeSystem + ?Sized>(sys: &F, t: f64, y: &[f64], h: f64) -> Result<Vec<f64>> {
    let k1 = sys.rhs(t, y)?;
    let k2 = sys.rhs(t + 0.5 * h, &axpy(y, h, &[(&k1, 0.5)]))?;
    let k3 = sys.rhs(t + 0.5 * h, &axpy(y, h, &[(&k2, 0.5)]))?;
    let k4 = sys.rhs(t + h, &axpy(y, h, &[(&k3, 1.0)]))?;
    Ok(axpy(
        y,
        h,
        &[(&k1, 1.0 / 6.0), (&k2, 1.0 / 3.0), (&k3, 1.0 / 3.0), (&k4, 1.0 / 6.0)],
    ))
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One Dormand-Prince step: fifth-order solution and error-norm estimate.
fn dopri_step<F: OdeSystem + ?Sized>(
    sys: &F,
    t: f64,
    y: &[f64],
    h: f64,
    rtol: f64,
    atol: f64,
) -> Result<(Vec<f64>, f64)> {
    let mut ks: Vec<Vec<f64>> = Vec::with_capacity(7);
    for s in 0..7 {
        let terms: Vec<(&[f64], f64)> = (0..s).map(|j| (ks[j].as_slice(), A[s][j])).collect();
        ks.push(sys.rhs(t + C[s] * h, &axpy(y, h, &terms))?);
    }
    let y5 = axpy(y, h, &ks.iter().zip(B5).map(|(k, b)| (k.as_slice(), b)).collect::<Vec<_>>());
    let y4 = axpy(y, h, &ks.iter().zip(B4).map(|(k, b)| (k.as_slice(), b)).collect::<Vec<_>>());
    let mut err: f64 = 0.0;
    for i in 0..y.len() {
        let sc = atol + rtol * y[i].abs().max(y5[i].abs());
        err = err.max(((y5[i] - y4[i]) / sc).abs());
    }
    Ok((y5, err))
}

fn advance_adaptive<F: OdeSystem + ?Sized>(
    sys: &F,
    t0: f64,
    t1: f64,
    y: &[f64],
    h: &mut f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>> {
    let mut t = t0;
    let mut y = y.to_vec();
    let mut rejected = 0;
    while t < t1 {
        let step = h.min(t1 - t);
        let (y_new, err) = dopri_step(sys, t, &y, step, cfg.rtol, cfg.atol)?;
        if err <= 1.0 && y_new.iter().all(|x| x.is_finite()) {
            t = if t1 - t <= step { t1 } else { t + step };
            y = y_new;
            let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            // keep the grid-limited step from shrinking the controller
            if step >= *h * 0.999 {
                *h = step * grow;
            }
            rejected = 0;
        } else {
            let shrink = if err.is_finite() { (0.9 * err.powf(-0.25)).clamp(0.1, 0.5) } else { 0.1 };
            *h = step * shrink;
            rejected += 1;
            if *h < 1e-14 * t1.abs().max(1.0) || rejected > 50 {
                return Err(Error::Integration {
                    t,
                    reason: format!("step size underflow (error norm {err:.3e})"),
                });
            }
        }
    }
    Ok(y)
}

/// Integrates `sys` from `y0` and samples the solution at `cfg.sample_times()`.
pub fn integrate<F: OdeSystem + ?Sized>(
    sys: &F,
    y0: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    if y0.len() != sys.dim() {
        return Err(Error::Invalid(format!(
            "initial state has {} components, system dimension is {}",
            y0.len(),
            sys.dim()
        )));
    }
    let times = cfg.sample_times();
    let mut y = y0.to_vec();
    sys.after_step(&mut y);
    sys.check(0.0, &y)?;
    finite(0.0, &y)?;
    let mut out = Trajectory {
        t: Vec::with_capacity(times.len()),
        y: Vec::with_capacity(times.len()),
    };
    out.t.push(times[0]);
    out.y.push(y.clone());
    let mut h = cfg.dt;
    for w in times.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        y = match cfg.method {
            Method::Rk4 => rk4_step(sys, t0, &y, t1 - t0)?,
            Method::Rk45Adaptive => advance_adaptive(sys, t0, t1, &y, &mut h, cfg)?,
        };
        sys.after_step(&mut y);
        finite(t1, &y)?;
        sys.check(t1, &y)?;
        out.t.push(t1);
        out.y.push(y.clone());
    }
    Ok(out)
}

/// Max over samples of `|g(y) − g(y₀)|`.
pub fn drift(traj: &Trajectory, g: impl Fn(&[f64]) -> f64) -> f64 {
    let g0 = g(&traj.y[0]);
    traj.y.iter().map(|y| (g(y) - g0).abs()).fold(0.0, f64::max)
}
