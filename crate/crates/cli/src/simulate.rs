use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use nhframes::cartan::{NhStructure, Penny, PennyParams};
use nhframes::chaplygin::{constrained_state, BodyParams, ChaplyginFlow, LGammaState, System};
use nhframes::geodesic::{collinearity_residual, integrate_geodesic};
use nhframes::io::{to_json_pretty, trajectory_csv, write_file};
use nhframes::ode::{integrate, IntegratorConfig, Method};
use nhframes::suite::{integral_drifts, random_state};
use nhframes::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{load, parse_triple};
use crate::{resolve_engine, Common};

/// Collinearity residual below which a penny path counts as a line.
const LINE_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Initial {
    /// Chaplygin systems: Poisson vector (normalised when `l` is absent).
    pub gamma: Option<[f64; 3]>,
    /// Chaplygin systems: angular momentum; taken as is together with `gamma`.
    pub l: Option<[f64; 3]>,
    /// Penny: `(x, y, θ, φ)`.
    pub q: Option<[f64; 4]>,
    /// Penny: quasi-velocities `(A, B)` along the roll and spin directions.
    pub v: Option<[f64; 2]>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub system: String,
    pub body: Option<BodyParams>,
    pub penny: PennyParams,
    pub integrator: IntegratorConfig,
    pub initial: Initial,
    pub out_dir: PathBuf,
    pub engine: Option<String>,
    pub seed: u64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            system: "veselova".into(),
            body: None,
            penny: PennyParams::default(),
            integrator: IntegratorConfig::default(),
            initial: Initial::default(),
            out_dir: PathBuf::from("nh-out"),
            engine: None,
            seed: 0,
        }
    }
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// penny | veselova | marble | rubber | homogeneous
    #[arg(long)]
    system: Option<String>,
    /// Output directory for trajectory.csv and manifest.json.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    /// rk4 | rk45-adaptive
    #[arg(long)]
    method: Option<String>,
    /// Principal inertias `I1,I2,I3`.
    #[arg(long, value_parser = parse_triple)]
    inertia: Option<[f64; 3]>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long, value_parser = parse_triple)]
    gamma: Option<[f64; 3]>,
    #[arg(long, value_parser = parse_triple)]
    l: Option<[f64; 3]>,
    /// Penny roll quasi-velocity.
    #[arg(long = "A", allow_hyphen_values = true)]
    a: Option<f64>,
    /// Penny spin quasi-velocity.
    #[arg(long = "B", allow_hyphen_values = true)]
    b: Option<f64>,
}

fn merged(a: &SimulateArgs) -> Result<SimulateConfig> {
    let mut c: SimulateConfig = load(a.common.config.as_deref())?;
    if let Some(s) = &a.system {
        c.system = s.clone();
    }
    if let Some(o) = &a.out {
        c.out_dir = o.clone();
    }
    if let Some(s) = a.common.seed {
        c.seed = s;
    }
    if let Some(dt) = a.dt {
        c.integrator.dt = dt;
    }
    if let Some(t) = a.t_end {
        c.integrator.t_end = t;
    }
    if let Some(m) = &a.method {
        c.integrator.method = match m.as_str() {
            "rk4" => Method::Rk4,
            "rk45-adaptive" | "dopri45" => Method::Rk45Adaptive,
            other => return Err(Error::Invalid(format!("unknown method `{other}`"))),
        };
    }
    if a.inertia.is_some() || a.mu.is_some() || a.r.is_some() {
        let mut p = c.body.unwrap_or_else(|| default_body(&c.system));
        if let Some(i) = a.inertia {
            p.inertia = i;
        }
        if let Some(m) = a.mu {
            p.mu = m;
        }
        if let Some(r) = a.r {
            p.r = r;
        }
        c.body = Some(p);
    }
    if a.gamma.is_some() {
        c.initial.gamma = a.gamma;
    }
    if a.l.is_some() {
        c.initial.l = a.l;
    }
    if a.a.is_some() || a.b.is_some() {
        let [va, vb] = c.initial.v.unwrap_or(DEFAULT_PENNY_V);
        c.initial.v = Some([a.a.unwrap_or(va), a.b.unwrap_or(vb)]);
    }
    Ok(c)
}

const DEFAULT_PENNY_V: [f64; 2] = [1.0, 0.5];

fn default_body(system: &str) -> BodyParams {
    if system == "homogeneous" {
        BodyParams::new([1.0; 3], 1.0, 1.0)
    } else {
        BodyParams::default()
    }
}

pub fn run(args: SimulateArgs, engine_flag: Option<&str>) -> Result<()> {
    let c = merged(&args)?;
    let engine = resolve_engine(engine_flag, c.engine.as_deref())?;
    c.integrator.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    // everything is computed before the output directory is touched
    let (csv, manifest) = if c.system == "penny" {
        c.penny.validate()?;
        let penny = Penny::new(c.penny);
        let q0 = c.initial.q.unwrap_or_else(|| {
            let b = penny.sample_box();
            [0, 1, 2, 3].map(|i| rng.gen_range(b[i].0..b[i].1))
        });
        let v0 = c.initial.v.unwrap_or(DEFAULT_PENNY_V);
        let (traj, summary) = integrate_geodesic(engine, &penny, &q0, &v0, &c.integrator)?;
        let pts: Vec<[f64; 2]> = traj.y.iter().map(|y| [y[0], y[1]]).collect();
        let col = collinearity_residual(&pts);
        let motion = if v0[0] == 0.0 {
            "spin-in-place"
        } else if v0[1] == 0.0 {
            "line"
        } else {
            "circle"
        };
        let manifest = json!({
            "command": "simulate",
            "system": "penny",
            "params": c.penny,
            "integrator": c.integrator,
            "engine": engine.name(),
            "seed": c.seed,
            "initial": {"q": q0, "v": v0},
            "rows": traj.len(),
            "drifts": {
                "energy": summary.energy_drift,
                "v1": summary.quasivelocity_drift[0],
                "v2": summary.quasivelocity_drift[1],
            },
            "motion": motion,
            "collinearity_residual": col,
            "line_trajectory": col < LINE_TOL,
            "csv": "trajectory.csv",
        });
        (trajectory_csv(&["x", "y", "theta", "phi", "v1", "v2"], &traj), manifest)
    } else {
        let system = System::parse(&c.system)?;
        let p = c.body.unwrap_or_else(|| default_body(&c.system));
        p.validate_for(system)?;
        let st = match (c.initial.l, c.initial.gamma) {
            (Some(l), Some(g)) => {
                let n = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
                if (n - 1.0).abs() > 1e-8 {
                    return Err(Error::Invalid(format!("initial gamma has norm {n}, expected 1")));
                }
                LGammaState::new(l, g)
            }
            (Some(_), None) => return Err(Error::Invalid("initial l needs gamma".into())),
            (None, Some(g)) => {
                let w = [0, 1, 2].map(|_| rng.gen_range(-1.0..1.0));
                constrained_state(system, &p, g, w)
            }
            (None, None) => random_state(system, &p, &mut rng),
        };
        let traj = integrate(&ChaplyginFlow { system, p }, &st.to_vec(), &c.integrator)?;
        let drifts: BTreeMap<&str, f64> = integral_drifts(system, &p, &traj).into_iter().collect();
        let last = LGammaState::from_slice(traj.last());
        let manifest = json!({
            "command": "simulate",
            "system": system.name(),
            "params": p,
            "integrator": c.integrator,
            "engine": engine.name(),
            "seed": c.seed,
            "initial": {"l": st.l.values(), "gamma": st.gamma.values()},
            "final": {"l": last.l.values(), "gamma": last.gamma.values()},
            "rows": traj.len(),
            "drifts": drifts,
            "csv": "trajectory.csv",
        });
        (trajectory_csv(&["L1", "L2", "L3", "g1", "g2", "g3"], &traj), manifest)
    };
    write_file(&c.out_dir.join("trajectory.csv"), &csv)?;
    write_file(&c.out_dir.join("manifest.json"), &to_json_pretty(&manifest)?)?;
    println!("wrote {}", c.out_dir.display());
    Ok(())
}
