use std::path::PathBuf;

use clap::Args;
use nhframes::cartan::{
    bfinal_normalize, canonical_line_field_check, growth_vector, symmetry_constancy_report,
    ConformallyScaled, EngelFlat, HorizontalSpan, Integrable, NhStructure, Penny, PennyParams,
};
use nhframes::{DiffEngine, Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{emit, load};
use crate::{resolve_engine, Common};

/// Spread below which a torsion entry counts as constant.
const CONSTANCY_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CartanConfig {
    /// penny | engel-normal-form | perturbed-penny | integrable
    pub structure: String,
    pub penny: PennyParams,
    /// Size of the conformal perturbation of the penny metric.
    pub eps: f64,
    pub points: usize,
    pub seed: u64,
    pub engine: Option<String>,
    pub out: Option<PathBuf>,
}

impl Default for CartanConfig {
    fn default() -> Self {
        Self {
            structure: "penny".into(),
            penny: PennyParams::default(),
            eps: 0.1,
            points: 20,
            seed: 0,
            engine: None,
            out: None,
        }
    }
}

#[derive(Args, Debug)]
pub struct CartanArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    structure: Option<String>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    /// Report file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn report<C: NhStructure>(engine: DiffEngine, s: &C, c: &CartanConfig) -> Result<Value> {
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let points: Vec<Vec<f64>> = (0..c.points)
        .map(|_| s.sample_box().iter().map(|&(lo, hi)| rng.gen_range(lo..hi)).collect())
        .collect();
    let growth = growth_vector(engine, &HorizontalSpan(s), &points[0])?;
    if !growth.is_engel() {
        return Err(Error::NotEngel(growth.ranks));
    }
    let tables = points
        .iter()
        .map(|q| bfinal_normalize(engine, s, q).map(|x| x.1))
        .collect::<Result<Vec<_>>>()?;
    let constancy = symmetry_constancy_report(&tables, CONSTANCY_TOL);
    let second = tables.iter().map(|t| t.second_order_residual().abs()).fold(0.0, f64::max);
    let norm = tables.iter().map(|t| t.normalization_residual()).fold(0.0, f64::max);
    let line = canonical_line_field_check(engine, s, &points[0])?;
    Ok(json!({
        "command": "cartan",
        "structure": s.name(),
        "engine": engine.name(),
        "seed": c.seed,
        "growth_vector": growth,
        "tables": tables.iter().map(|t| t.to_json()).collect::<Vec<_>>(),
        "normalization_residual_max": norm,
        "t4_14_relation_residual_max": second,
        "constancy": constancy,
        "verdict": if constancy.maximal { "maximal symmetry" } else { "not maximal" },
        "line_field": line,
    }))
}

pub fn run(a: CartanArgs, engine_flag: Option<&str>) -> Result<()> {
    let mut c: CartanConfig = load(a.common.config.as_deref())?;
    if let Some(s) = a.structure {
        c.structure = s;
    }
    if let Some(n) = a.points {
        c.points = n;
    }
    if let Some(e) = a.eps {
        c.eps = e;
    }
    if let Some(s) = a.common.seed {
        c.seed = s;
    }
    if a.out.is_some() {
        c.out = a.out;
    }
    if c.points == 0 {
        return Err(Error::Invalid("points must be at least 1".into()));
    }
    let engine = resolve_engine(engine_flag, c.engine.as_deref())?;
    c.penny.validate()?;
    let v = match c.structure.as_str() {
        "penny" => report(engine, &Penny::new(c.penny), &c)?,
        "engel-normal-form" => report(engine, &EngelFlat, &c)?,
        "perturbed-penny" => report(engine, &ConformallyScaled::perturbed(Penny::new(c.penny), c.eps), &c)?,
        "integrable" => report(engine, &Integrable, &c)?,
        other => return Err(Error::Invalid(format!("unknown structure `{other}`"))),
    };
    emit(&v, c.out.as_deref())
}
