//! Nonholonomic structures on 4-manifolds: growth vectors of distributions,
//! derived ideals of adapted coframes and the reduction of an Engel-type
//! structure to its canonical coframing.

mod bfinal;
mod lie;
mod structures;

pub use bfinal::{
    bfinal_normalize, canonical_line_field_check, natural_metric, symmetry_constancy_report,
    BFinal, ConstancyReport, LineFieldCheck, Stage12, TorsionTable, LINE_FIELD_TOL,
    NORMALIZATION_TOL,
};
pub use lie::{identify_lie_algebra, LieAlgebraSummary};
pub use structures::{
    ConformallyScaled, EngelFlat, EngelNormalForm, Integrable, Penny, PennyMetric, PennyParams,
    PennyVariant,
};

use crate::diff::{jacobian, DiffEngine, VectorFn};
use crate::error::{Error, Result};
use crate::exterior::{check_coframe, frame, structure_functions, CoframeField};
use crate::linalg::DMat;
use crate::scalar::Real;
use serde::Serialize;

/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOL: f64 = 1e-8;

/// Tolerance of the derived-ideal membership test on `dη^ν(e_i, e_j)`.
pub const DERIVED_TOL: f64 = 1e-9;

/// A distribution spanned by `rank()` vector fields on an `dim()`-chart.
pub trait Distribution {
    fn dim(&self) -> usize;
    fn rank(&self) -> usize;
    /// Field `i` occupies entries `[i·n, (i+1)·n)`.
    fn fields<S: Real>(&self, q: &[S]) -> Vec<S>;
}

impl<T: Distribution> Distribution for &T {
    fn dim(&self) -> usize {
        (*self).dim()
    }
    fn rank(&self) -> usize {
        (*self).rank()
    }
    fn fields<S: Real>(&self, q: &[S]) -> Vec<S> {
        (*self).fields(q)
    }
}

/// A nonholonomic structure given by an adapted coframe: rows `0..r`
/// are orthonormal on the constraint distribution, the remaining rows
/// annihilate it and the last `derived_rows()` of them generate `I⁽¹⁾`.
pub trait NhStructure: CoframeField {
    fn rank(&self) -> usize;
    fn derived_rows(&self) -> usize;
    fn name(&self) -> String;
    /// Box from which sample points are drawn.
    fn sample_box(&self) -> Vec<(f64, f64)> {
        vec![(-1.0, 1.0); self.dim()]
    }
}

impl<T: NhStructure> NhStructure for &T {
    fn rank(&self) -> usize {
        (*self).rank()
    }
    fn derived_rows(&self) -> usize {
        (*self).derived_rows()
    }
    fn name(&self) -> String {
        (*self).name()
    }
    fn sample_box(&self) -> Vec<(f64, f64)> {
        (*self).sample_box()
    }
}

/// The constraint distribution of a structure: its first `r` frame vectors.
pub struct HorizontalSpan<'a, C>(pub &'a C);

impl<C: NhStructure> Distribution for HorizontalSpan<'_, C> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn rank(&self) -> usize {
        self.0.rank()
    }
    fn fields<S: Real>(&self, q: &[S]) -> Vec<S> {
        let b = frame(self.0, q);
        (0..self.0.rank()).flat_map(|j| b.col(j)).collect()
    }
}

/// Span `{X_a}` flattened for differentiation.
struct Fields<'a, D>(&'a D);

impl<D: Distribution> VectorFn for Fields<'_, D> {
    fn dim_in(&self) -> usize {
        self.0.dim()
    }
    fn dim_out(&self) -> usize {
        self.0.dim() * self.0.rank()
    }
    fn eval<S: Real>(&self, q: &[S]) -> Vec<S> {
        self.0.fields(q)
    }
}

/// All brackets `[X_a, Y_b]` of two flattened families of vector fields.
struct Brackets<'a, F, G> {
    engine: DiffEngine,
    n: usize,
    f: &'a F,
    g: &'a G,
}

impl<F: VectorFn, G: VectorFn> VectorFn for Brackets<'_, F, G> {
    fn dim_in(&self) -> usize {
        self.n
    }
    fn dim_out(&self) -> usize {
        self.f.dim_out() * self.g.dim_out() / self.n
    }
    fn eval<S: Real>(&self, q: &[S]) -> Vec<S> {
        let n = self.n;
        let (xs, ys) = (self.f.eval(q), self.g.eval(q));
        let (dx, dy) = (
            jacobian(self.engine, self.f, q),
            jacobian(self.engine, self.g, q),
        );
        let mut out = Vec::with_capacity(self.dim_out());
        for a in 0..xs.len() / n {
            for b in 0..ys.len() / n {
                // [X, Y]^c = Σ_x (X^x ∂_x Y^c − Y^x ∂_x X^c)
                for c in 0..n {
                    let mut acc = S::zero();
                    for x in 0..n {
                        acc += xs[a * n + x] * dy[(b * n + c, x)]
                            - ys[b * n + x] * dx[(a * n + c, x)];
                    }
                    out.push(acc);
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GrowthVector {
    pub ranks: Vec<usize>,
    /// False when a nearby point gave a different growth vector.
    pub locally_constant: bool,
}

impl GrowthVector {
    pub fn is_engel(&self) -> bool {
        self.ranks == [2, 3, 4]
    }
}

fn ranks_at<D: Distribution>(engine: DiffEngine, d: &D, q: &[f64]) -> Vec<usize> {
    let n = d.dim();
    let l1 = Fields(d);
    let l2 = Brackets { engine, n, f: &l1, g: &l1 };
    let l3 = Brackets { engine, n, f: &l1, g: &l2 };
    let mut vectors: Vec<f64> = Vec::new();
    let mut ranks: Vec<usize> = Vec::new();
    for level in 0..3 {
        vectors.extend(match level {
            0 => l1.eval(q),
            1 => l2.eval(q),
            _ => l3.eval(q),
        });
        let cols = vectors.len() / n;
        let mut m = DMat::zeros(n, cols);
        for j in 0..cols {
            for i in 0..n {
                m[(i, j)] = vectors[j * n + i];
            }
        }
        let r = m.rank(RANK_TOL);
        let stalled = ranks.last() == Some(&r);
        ranks.push(r);
        if stalled || r == n {
            break;
        }
    }
    ranks
}

/// Ranks of `𝓗 ⊂ 𝓗¹ ⊂ 𝓗²` at `q`, where `𝓗^{k+1} = 𝓗^k + [𝓗, 𝓗^k]`,
/// stopping at full rank or when the flag stalls (brackets up to depth 3).
pub fn growth_vector<D: Distribution>(
    engine: DiffEngine,
    d: &D,
    q: &[f64],
) -> Result<GrowthVector> {
    if q.len() != d.dim() {
        return Err(Error::Invalid(format!(
            "point has {} coordinates, distribution lives in dimension {}",
            q.len(),
            d.dim()
        )));
    }
    let ranks = ranks_at(engine, d, q);
    let mut locally_constant = true;
    for axis in 0..q.len() {
        for sign in [-1.0, 1.0] {
            let mut p = q.to_vec();
            p[axis] += sign * 1e-3;
            if ranks_at(engine, d, &p) != ranks {
                locally_constant = false;
            }
        }
    }
    Ok(GrowthVector {
        ranks,
        locally_constant,
    })
}

/// Index partition of an adapted coframe: horizontal rows, annihilator rows
/// outside the derived ideal, and rows of `I⁽¹⁾`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IdealPartition {
    pub horizontal: Vec<usize>,
    pub non_derived: Vec<usize>,
    pub derived: Vec<usize>,
}

/// Tests `dη^ν ≡ 0 mod 𝓘` for every annihilator row, i.e.
/// `dη^ν(e_i, e_j) = 0` for all horizontal pairs.
pub fn derived_ideal_coframe<C: NhStructure>(
    engine: DiffEngine,
    s: &C,
    q: &[f64],
) -> Result<IdealPartition> {
    check_coframe(s, q)?;
    let (n, r) = (s.dim(), s.rank());
    let c = structure_functions(engine, s, q);
    let mut part = IdealPartition {
        horizontal: (0..r).collect(),
        non_derived: Vec::new(),
        derived: Vec::new(),
    };
    let first_declared = n - s.derived_rows();
    for nu in r..n {
        let mut worst: f64 = 0.0;
        for i in 0..r {
            for j in i + 1..r {
                worst = worst.max(c.get(nu, i, j).abs());
            }
        }
        if worst < DERIVED_TOL {
            part.derived.push(nu);
        } else if nu >= first_declared {
            return Err(Error::Misdeclared {
                row: nu,
                reason: format!("declared in the derived ideal but dη(e_i, e_j) = {worst:.3e}"),
            });
        } else {
            part.non_derived.push(nu);
        }
    }
    Ok(part)
}
