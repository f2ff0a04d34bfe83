use std::path::PathBuf;

use clap::Args;
use nhframes::chaplygin::BodyParams;
use nhframes::expr::Expr;
use nhframes::hamiltonize::{
    conformal_obstruction, d_scaled_omega, skew_gradient, veselova_noise_floor, AlmostHamiltonianChart,
    CustomFactor, Factor, GridSpec, MarbleSo3, ObstructionReport, SphereChart,
};
use nhframes::{DiffEngine, Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{emit, load};
use crate::{resolve_engine, Common};

/// Tolerance of the homogeneous closed-form cross-check.
const CLOSED_FORM_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HamiltonizeConfig {
    /// veselova | rubber | marble-so3 | marble-reduced
    pub system: String,
    /// paper-density | unit | an expression in g1, g2, g3
    pub factor: String,
    pub body: Option<BodyParams>,
    /// Area constant of the reduced marble.
    pub l3: f64,
    /// Points per axis of the T*S² grid.
    pub grid: usize,
    /// Random sample size on T*SO(3).
    pub so3_points: usize,
    pub seed: u64,
    pub engine: Option<String>,
    pub out: Option<PathBuf>,
}

impl Default for HamiltonizeConfig {
    fn default() -> Self {
        Self {
            system: "veselova".into(),
            factor: "paper-density".into(),
            body: None,
            l3: 0.0,
            grid: 10,
            so3_points: 200,
            seed: 0,
            engine: None,
            out: None,
        }
    }
}

#[derive(Args, Debug)]
pub struct HamiltonizeArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    system: Option<String>,
    #[arg(long)]
    factor: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    l3: Option<f64>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    so3_points: Option<usize>,
    /// Report file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum FactorChoice {
    Builtin(Factor),
    Custom(Expr),
}

fn factor_choice(s: &str) -> Result<FactorChoice> {
    Ok(match s {
        "paper-density" => FactorChoice::Builtin(Factor::Density),
        "unit" => FactorChoice::Builtin(Factor::One),
        expr => FactorChoice::Custom(Expr::parse(expr)?),
    })
}

fn obstruction<C: AlmostHamiltonianChart>(
    engine: DiffEngine,
    chart: &C,
    f: &FactorChoice,
    points: &[Vec<f64>],
    floor: f64,
) -> Result<ObstructionReport> {
    match f {
        FactorChoice::Builtin(b) => conformal_obstruction(engine, chart, *b, points, Some(floor)),
        FactorChoice::Custom(e) => {
            let wrapped = CustomFactor { inner: chart, expr: e.clone() };
            conformal_obstruction(engine, &wrapped, Factor::Density, points, Some(floor))
        }
    }
}

pub fn run(a: HamiltonizeArgs, engine_flag: Option<&str>) -> Result<()> {
    let mut c: HamiltonizeConfig = load(a.common.config.as_deref())?;
    if let Some(s) = a.system {
        c.system = s;
    }
    if let Some(f) = a.factor {
        c.factor = f;
    }
    if let Some(l) = a.l3 {
        c.l3 = l;
    }
    if let Some(g) = a.grid {
        c.grid = g;
    }
    if let Some(n) = a.so3_points {
        c.so3_points = n;
    }
    if let Some(s) = a.common.seed {
        c.seed = s;
    }
    if a.out.is_some() {
        c.out = a.out;
    }
    if !["veselova", "rubber", "marble-reduced", "marble-so3"].contains(&c.system.as_str()) {
        return Err(Error::Invalid(format!("unknown system `{}`", c.system)));
    }
    let engine = resolve_engine(engine_flag, c.engine.as_deref())?;
    let factor = factor_choice(&c.factor)?;
    let sphere = GridSpec::sphere(c.grid);
    sphere.validate()?;
    let so3 = c.system == "marble-so3";
    // the homogeneous ball is the default at the T*SO(3) level, where the closed form applies
    let p = c.body.unwrap_or(if so3 { BodyParams::new([1.0; 3], 1.0, 1.0) } else { BodyParams::default() });
    p.validate()?;
    let grid_points = sphere.points();
    let floor = veselova_noise_floor(engine, &p, &grid_points)?;
    let (rep, grid, closed): (ObstructionReport, Value, Value) = match c.system.as_str() {
        "veselova" | "rubber" | "marble-reduced" => {
            let chart = match c.system.as_str() {
                "veselova" => SphereChart::veselova(p),
                "rubber" => SphereChart::rubber(p),
                _ => SphereChart::reduced_marble(p, c.l3),
            };
            let rep = obstruction(engine, &chart, &factor, &grid_points, floor)?;
            (rep, json!({"chart": "theta,phi,p1,p2", "per_axis": sphere.per_axis, "bounds": sphere.bounds, "points": sphere.len()}), Value::Null)
        }
        "marble-so3" => {
            if c.so3_points == 0 {
                return Err(Error::Invalid("so3_points must be at least 1".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
            let points: Vec<Vec<f64>> = (0..c.so3_points)
                .map(|_| (0..6).map(|_| rng.gen_range(-1.5..1.5)).collect())
                .collect();
            let chart = MarbleSo3 { p };
            let rep = obstruction(engine, &chart, &factor, &points, floor)?;
            let homogeneous = p.inertia.iter().all(|&i| i == p.inertia[0]);
            let closed = if homogeneous {
                let mut worst: f64 = 0.0;
                for x in &points {
                    let ix = d_scaled_omega(engine, &chart, x, Factor::One).interior(&skew_gradient(engine, &chart, x)?)?;
                    worst = worst.max(ix.sub(&chart.homogeneous_closed_form(x)?)?.max_abs());
                }
                json!({"max_error": worst, "tol": CLOSED_FORM_TOL, "pass": worst < CLOSED_FORM_TOL})
            } else {
                Value::Null
            };
            (rep, json!({"chart": "w,l (R = exp(w))", "random_points": points.len(), "box": [-1.5, 1.5], "seed": c.seed}), closed)
        }
        _ => unreachable!("system ids are checked above"),
    };
    let v = json!({
        "command": "hamiltonize",
        "system": c.system,
        "f-id": c.factor,
        "engine": engine.name(),
        "params": p,
        "l3": if c.system == "marble-reduced" { json!(c.l3) } else { Value::Null },
        "grid": grid,
        "max_d_fOmega": rep.max_d_f_omega,
        "max_ix_d_fOmega": rep.max_ix_d_f_omega,
        "noise_floor": floor,
        "verdict": rep.verdict.describe(),
        "closed_form_check": closed,
        "report": rep,
    });
    emit(&v, c.out.as_deref())
}
