//! Pointwise reduction of an Engel-type adapted coframe to the canonical
//! coframing, and the invariants read off from it.
//!
//! Three algebraic steps, each using the structure functions of the
//! previous coframe (0-based rows, so `η³` below is row 2):
//! 1. `η³ ↦ a₃₃η³` with `a₃₃ = det A / c³₁₂` so that `T³₁₂ = 1`;
//! 2. rotate the horizontal rows by `A ∈ O(2)` and scale `η⁴ ↦ a₄₄η⁴` so that
//!    `(T⁴₁₃, T⁴₂₃) = (0, 1)`; under the action the pair transforms as
//!    `(a₄₄/a₃₃)·A·(c⁴₁₃, c⁴₂₃)`;
//! 3. `η^i ↦ η^i + B_{i4}η⁴`, `η³ ↦ η³ + a₃₄η⁴` with `B₁₄ = −c¹₂₃`,
//!    `B₂₄ = −c²₂₃`, `a₃₄ = −c³₂₃`, which zeroes `T¹₂₃, T²₂₃, T³₂₃`.
//!
//! Of the four representatives left by the residual `Z₂×Z₂`, the one with
//! `a₃₃ > 0` and `a₄₄ > 0` is returned; it depends smoothly on the point.

use super::lie::{identify_lie_algebra, LieAlgebraSummary};
use super::{growth_vector, HorizontalSpan, NhStructure};
use crate::diff::{jacobian, DiffEngine};
use crate::error::{Error, Result};
use crate::exterior::{check_coframe, frame, structure_functions, CoframeField, FrameOf, StructureFunctions};
use crate::linalg::DMat;
use crate::scalar::Real;
use serde::Serialize;
use std::collections::BTreeMap;

/// Tolerance on the normalized entries of a torsion table.
pub const NORMALIZATION_TOL: f64 = 1e-6;

/// Tolerance of the bracket test for the canonical line field.
pub const LINE_FIELD_TOL: f64 = 1e-6;

/// Below this `|c³₁₂|` the third row is treated as horizontal.
const DEGENERATE_TOL: f64 = 1e-10;

/// Finite differences nested three deep lose `ε/h³`; inner levels use at
/// least this step.
const NESTED_FD_STEP: f64 = 1e-3;

fn nested(engine: DiffEngine) -> DiffEngine {
    match engine {
        DiffEngine::Ad => DiffEngine::Ad,
        DiffEngine::Fd { h } => DiffEngine::Fd {
            h: h.max(NESTED_FD_STEP),
        },
    }
}

/// Coframe after the first two reductions.
pub struct Stage12<'a, C> {
    pub engine: DiffEngine,
    pub inner: &'a C,
}

fn stage12_matrix<S: Real>(c: &StructureFunctions<S>) -> DMat<S> {
    let c312 = c.get(2, 0, 1);
    let (v1, v2) = (c.get(3, 0, 2), c.get(3, 1, 2));
    let norm = (v1 * v1 + v2 * v2).sqrt();
    let (u1, u2) = (v1 / norm, v2 / norm);
    // det A = sign(c³₁₂) keeps a₃₃ positive
    let s = if c312.value() < 0.0 { -1.0 } else { 1.0 };
    let a33 = c312.recip() * s;
    let a44 = a33 / norm;
    let z = S::zero();
    DMat::from_rows(&[
        vec![u2 * s, -u1 * s, z, z],
        vec![u1, u2, z, z],
        vec![z, z, a33, z],
        vec![z, z, z, a44],
    ])
}

impl<C: CoframeField> CoframeField for Stage12<'_, C> {
    fn dim(&self) -> usize {
        4
    }
    fn coframe<S: Real>(&self, q: &[S]) -> DMat<S> {
        let c = structure_functions(self.engine, self.inner, q);
        stage12_matrix(&c).matmul(&self.inner.coframe(q))
    }
    fn orthonormal(&self) -> bool {
        false
    }
}

/// The canonical coframe `η̄` of an Engel nonholonomic structure.
pub struct BFinal<'a, C> {
    pub stage12: Stage12<'a, C>,
}

impl<'a, C: NhStructure> BFinal<'a, C> {
    pub fn new(engine: DiffEngine, inner: &'a C) -> Self {
        Self {
            stage12: Stage12 {
                engine: nested(engine),
                inner,
            },
        }
    }
}

impl<C: CoframeField> CoframeField for BFinal<'_, C> {
    fn dim(&self) -> usize {
        4
    }
    fn coframe<S: Real>(&self, q: &[S]) -> DMat<S> {
        let c = structure_functions(self.stage12.engine, &self.stage12, q);
        let mut g = DMat::identity(4);
        g[(0, 3)] = -c.get(0, 1, 2);
        g[(1, 3)] = -c.get(1, 1, 2);
        g[(2, 3)] = -c.get(2, 1, 2);
        g.matmul(&self.stage12.coframe(q))
    }
    fn orthonormal(&self) -> bool {
        false
    }
}

/// All 24 torsion functions `T^I_{JK}` (`J < K`) of the canonical coframe
/// at a point, labelled with 1-based indices.
#[derive(Clone, Debug, PartialEq)]
pub struct TorsionTable {
    pub point: Vec<f64>,
    pub t: StructureFunctions<f64>,
}

impl TorsionTable {
    /// `T^I_{JK}` with 1-based indices as printed in reports.
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.t.get(i - 1, j - 1, k - 1)
    }

    pub fn entries(&self) -> Vec<(String, f64)> {
        let mut out = Vec::with_capacity(24);
        for i in 0..4 {
            for j in 0..4 {
                for k in j + 1..4 {
                    out.push((format!("T{}_{}{}", i + 1, j + 1, k + 1), self.t.get(i, j, k)));
                }
            }
        }
        out
    }

    /// Largest deviation of the normalized entries from their targets:
    /// `T³₁₂ = 1`, `T⁴₂₃ = 1`, `T⁴₁₃ = T⁴₁₂ = 0`, `T¹₂₃ = T²₂₃ = T³₂₃ = 0`.
    pub fn normalization_residual(&self) -> f64 {
        [
            self.get(3, 1, 2) - 1.0,
            self.get(4, 2, 3) - 1.0,
            self.get(4, 1, 3),
            self.get(4, 1, 2),
            self.get(1, 2, 3),
            self.get(2, 2, 3),
            self.get(3, 2, 3),
        ]
        .iter()
        .fold(0.0, |m: f64, x| m.max(x.abs()))
    }

    /// `T⁴₁₄ − (T²₁₂ + T³₁₃)`.
    pub fn second_order_residual(&self) -> f64 {
        self.get(4, 1, 4) - (self.get(2, 1, 2) + self.get(3, 1, 3))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let map: BTreeMap<String, f64> = self.entries().into_iter().collect();
        serde_json::json!({
            "point": self.point,
            "torsion": map,
            "normalization_residual": self.normalization_residual(),
            "second_order_residual": self.second_order_residual(),
        })
    }
}

/// Reduces `s` at `q` and returns the canonical coframe field together with
/// its torsion table at `q`.
pub fn bfinal_normalize<'a, C: NhStructure>(
    engine: DiffEngine,
    s: &'a C,
    q: &[f64],
) -> Result<(BFinal<'a, C>, TorsionTable)> {
    check_coframe(s, q)?;
    if s.dim() != 4 || s.rank() != 2 {
        return Err(Error::Invalid(format!(
            "Engel reduction needs a rank-2 structure on a 4-manifold, got rank {} in dimension {}",
            s.rank(),
            s.dim()
        )));
    }
    let growth = growth_vector(engine, &HorizontalSpan(s), q)?;
    if !growth.is_engel() {
        return Err(Error::NotEngel(growth.ranks));
    }
    let c = structure_functions(engine, s, q);
    let c312 = c.get(2, 0, 1);
    if c312.abs() < DEGENERATE_TOL {
        return Err(Error::Misdeclared {
            row: 2,
            reason: format!("dη³(e₁, e₂) = {c312:.3e}, the row does not detect [𝓗, 𝓗]"),
        });
    }
    let v = (c.get(3, 0, 2), c.get(3, 1, 2));
    if v.0.hypot(v.1) < DEGENERATE_TOL {
        return Err(Error::NotEngel(growth.ranks));
    }
    let bf = BFinal::new(engine, s);
    let t = structure_functions(engine, &bf, q);
    if t.c.iter().any(|x| !x.is_finite()) {
        return Err(Error::Normalisation("torsion is not finite".into()));
    }
    Ok((bf, TorsionTable { point: q.to_vec(), t }))
}

/// `g_nat = Σ η̄^I ⊗ η̄^I` in coordinates.
pub fn natural_metric<C: NhStructure>(bf: &BFinal<'_, C>, q: &[f64]) -> DMat<f64> {
    let a = bf.coframe(q);
    a.transpose().matmul(&a)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstancyReport {
    pub points: usize,
    pub tolerance: f64,
    /// Spread (max − min) of every torsion entry over the sampled points.
    pub spreads: BTreeMap<String, f64>,
    pub max_spread: f64,
    pub maximal: bool,
    pub verdict: String,
    pub non_constant: Vec<String>,
    /// Mean value of every entry.
    pub constants: BTreeMap<String, f64>,
    pub lie_algebra: Option<LieAlgebraSummary>,
}

/// Constancy of the torsion over a sample of tables. With all spreads below
/// `tol` the canonical frame spans a 4-dimensional Lie algebra whose
/// structure constants are `[X_J, X_K] = −Σ T^I_{JK} X_I`.
pub fn symmetry_constancy_report(tables: &[TorsionTable], tol: f64) -> ConstancyReport {
    let mut spreads = BTreeMap::new();
    let mut constants = BTreeMap::new();
    let mut non_constant = Vec::new();
    let mut max_spread: f64 = 0.0;
    if let Some(first) = tables.first() {
        for (idx, (label, _)) in first.entries().into_iter().enumerate() {
            let vals: Vec<f64> = tables.iter().map(|t| t.entries()[idx].1).collect();
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let spread = hi - lo;
            if !(spread < tol) {
                non_constant.push(label.clone());
            }
            max_spread = max_spread.max(spread);
            constants.insert(label.clone(), vals.iter().sum::<f64>() / vals.len() as f64);
            spreads.insert(label, spread);
        }
    }
    let maximal = !tables.is_empty() && non_constant.is_empty();
    let lie_algebra = if maximal {
        let n = tables[0].t.n;
        let mut mean = StructureFunctions {
            n,
            c: vec![0.0; n * n * n],
        };
        for t in tables {
            for (m, x) in mean.c.iter_mut().zip(&t.t.c) {
                *m += x / tables.len() as f64;
            }
        }
        Some(identify_lie_algebra(&mean, tol.max(1e-9)))
    } else {
        None
    };
    let verdict = if maximal {
        "integrable e-structure (dim-4 symmetry)".to_string()
    } else {
        format!("non-maximal: {} non-constant invariants", non_constant.len())
    };
    ConstancyReport {
        points: tables.len(),
        tolerance: tol,
        spreads,
        max_spread,
        maximal,
        verdict,
        non_constant,
        constants,
        lie_algebra,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LineFieldCheck {
    /// `η̄⁴([X₃, X₁])`.
    pub x1_value: f64,
    /// `η̄⁴([X₃, X₂])`.
    pub x2_value: f64,
    pub x1_passes: bool,
    pub x2_fails: bool,
}

impl LineFieldCheck {
    pub fn ok(&self) -> bool {
        self.x1_passes && self.x2_fails
    }
}

/// Tests `[L, 𝓗¹] ⊂ 𝓗¹` for `L = span(X₁)` and for `span(X₂)` by evaluating
/// `η̄⁴([X₃, X])` from the Jacobian of the canonical frame.
pub fn canonical_line_field_check<C: NhStructure>(
    engine: DiffEngine,
    s: &C,
    q: &[f64],
) -> Result<LineFieldCheck> {
    let (bf, _) = bfinal_normalize(engine, s, q)?;
    let n = 4;
    let b = frame(&bf, q);
    let db = jacobian(engine, &FrameOf(&bf), q);
    let eta4 = bf.coframe(q).row(3);
    let bracket_eta4 = |j: usize, k: usize| -> f64 {
        // [e_j, e_k] = De_k·e_j − De_j·e_k
        let mut acc = 0.0;
        for c in 0..n {
            let mut v = 0.0;
            for x in 0..n {
                v += b[(x, j)] * db[(c * n + k, x)] - b[(x, k)] * db[(c * n + j, x)];
            }
            acc += eta4[c] * v;
        }
        acc
    };
    let x1_value = bracket_eta4(2, 0);
    let x2_value = bracket_eta4(2, 1);
    Ok(LineFieldCheck {
        x1_value,
        x2_value,
        x1_passes: x1_value.abs() < LINE_FIELD_TOL,
        x2_fails: x2_value.abs() >= LINE_FIELD_TOL,
    })
}

impl<C: NhStructure> NhStructure for BFinal<'_, C> {
    fn rank(&self) -> usize {
        2
    }
    fn derived_rows(&self) -> usize {
        1
    }
    fn name(&self) -> String {
        format!("normalized-{}", self.stage12.inner.name())
    }
    fn sample_box(&self) -> Vec<(f64, f64)> {
        self.stage12.inner.sample_box()
    }
}
