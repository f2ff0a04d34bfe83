//! Coframe fields, structure functions, the Levi-Civita connection of an
//! orthonormal coframe and exterior calculus in coordinate or anholonomic bases.
//!
//! Conventions (0-based indices throughout):
//! * a coframe is a matrix field `A(q)` whose row `I` is `η^I = Σ_a A_{Ia} dq^a`;
//!   the dual frame is `B = A⁻¹`, column `J` is `e_J`;
//! * `dη^I = Σ_{J<K} c^I_{JK} η^J∧η^K`, equivalently `c^I_{JK} = −η^I([e_J, e_K])`;
//! * the connection satisfies `dη^I = −Σ_J ω_{IJ}∧η^J` with `ω` skew and
//!   `ω_{IJ}(e_K) = Γ_{IJK} = ½(c^I_{JK} − c^J_{IK} − c^K_{IJ})`.

use crate::diff::{jacobian, DiffEngine, VectorFn};
use crate::error::{Error, Result};
use crate::forms::Form;
use crate::linalg::DMat;
use crate::scalar::Real;

/// Coframe field on a chart: `η^I = Σ_a A_{Ia}(q) dq^a`.
pub trait CoframeField {
    fn dim(&self) -> usize;
    fn coframe<S: Real>(&self, q: &[S]) -> DMat<S>;
    /// Declared orthonormality with respect to the metric the coframe encodes.
    fn orthonormal(&self) -> bool {
        true
    }
}

impl<T: CoframeField> CoframeField for &T {
    fn dim(&self) -> usize {
        (*self).dim()
    }
    fn coframe<S: Real>(&self, q: &[S]) -> DMat<S> {
        (*self).coframe(q)
    }
    fn orthonormal(&self) -> bool {
        (*self).orthonormal()
    }
}

/// Frame `B = A⁻¹`; a NaN matrix where the coframe is singular.
pub fn frame<S: Real, C: CoframeField>(cof: &C, q: &[S]) -> DMat<S> {
    let a = cof.coframe(q);
    a.inverse().unwrap_or_else(|_| {
        let mut m = DMat::zeros(a.rows, a.cols);
        m.data.iter_mut().for_each(|x| *x = S::cst(f64::NAN));
        m
    })
}

/// Rejects coframes that are singular (or numerically so) at `q`.
pub fn check_coframe<C: CoframeField>(cof: &C, q: &[f64]) -> Result<f64> {
    if q.len() != cof.dim() {
        return Err(Error::Invalid(format!(
            "point has {} coordinates, coframe dimension is {}",
            q.len(),
            cof.dim()
        )));
    }
    let a = cof.coframe(q);
    let cond = a.condition_inf();
    if !cond.is_finite() || cond > 1e12 {
        return Err(Error::SingularCoframe { cond });
    }
    Ok(cond)
}

/// The frame matrix as a flattened map, for differentiation.
pub struct FrameOf<'a, C>(pub &'a C);

impl<C: CoframeField> VectorFn for FrameOf<'_, C> {
    fn dim_in(&self) -> usize {
        self.0.dim()
    }
    fn dim_out(&self) -> usize {
        self.0.dim() * self.0.dim()
    }
    fn eval<S: Real>(&self, q: &[S]) -> Vec<S> {
        frame(self.0, q).data
    }
}

/// The coframe matrix as a flattened map, for differentiation.
pub struct CoframeOf<'a, C>(pub &'a C);

impl<C: CoframeField> VectorFn for CoframeOf<'_, C> {
    fn dim_in(&self) -> usize {
        self.0.dim()
    }
    fn dim_out(&self) -> usize {
        self.0.dim() * self.0.dim()
    }
    fn eval<S: Real>(&self, q: &[S]) -> Vec<S> {
        self.0.coframe(q).data
    }
}

/// Structure functions `c^I_{JK}` at a point, stored densely and skew in `J, K`.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureFunctions<S> {
    pub n: usize,
    pub c: Vec<S>,
}

impl<S: Real> StructureFunctions<S> {
    pub fn get(&self, i: usize, j: usize, k: usize) -> S {
        self.c[(i * self.n + j) * self.n + k]
    }
    fn set(&mut self, i: usize, j: usize, k: usize, v: S) {
        let n = self.n;
        self.c[(i * n + j) * n + k] = v;
        self.c[(i * n + k) * n + j] = -v;
    }
    /// `dη^I` as a 2-form in the coframe basis.
    pub fn d_eta(&self, i: usize) -> Form<S> {
        let mut f = Form::zero(self.n, 2);
        for j in 0..self.n {
            for k in j + 1..self.n {
                f.add_at(&[j, k], self.get(i, j, k));
            }
        }
        f
    }
    pub fn values(&self) -> StructureFunctions<f64> {
        StructureFunctions {
            n: self.n,
            c: self.c.iter().map(|x| x.value()).collect(),
        }
    }
}

/// `c^I_{JK} = −η^I([e_J, e_K])` with `[e_J, e_K] = De_K·e_J − De_J·e_K`.
pub fn structure_functions<S: Real, C: CoframeField>(
    engine: DiffEngine,
    cof: &C,
    q: &[S],
) -> StructureFunctions<S> {
    let n = cof.dim();
    let a = cof.coframe(q);
    let b = frame(cof, q);
    // db[(c*n + K, a)] = ∂_a B_{cK}
    let db = jacobian(engine, &FrameOf(cof), q);
    let mut out = StructureFunctions {
        n,
        c: vec![S::zero(); n * n * n],
    };
    for j in 0..n {
        for k in j + 1..n {
            let mut br = vec![S::zero(); n];
            for (c, brc) in br.iter_mut().enumerate() {
                let mut acc = S::zero();
                for x in 0..n {
                    acc += b[(x, j)] * db[(c * n + k, x)] - b[(x, k)] * db[(c * n + j, x)];
                }
                *brc = acc;
            }
            for i in 0..n {
                let mut acc = S::zero();
                for c in 0..n {
                    acc += a[(i, c)] * br[c];
                }
                out.set(i, j, k, -acc);
            }
        }
    }
    out
}

/// Connection coefficients `Γ_{IJK} = ω_{IJ}(e_K)`, skew in `I, J`.
#[derive(Clone, Debug, PartialEq)]
pub struct Connection<S> {
    pub n: usize,
    pub gamma: Vec<S>,
}

impl<S: Real> Connection<S> {
    pub fn get(&self, i: usize, j: usize, k: usize) -> S {
        self.gamma[(i * self.n + j) * self.n + k]
    }
    /// `ω_{IJ}` as a 1-form in the coframe basis.
    pub fn omega(&self, i: usize, j: usize) -> Form<S> {
        Form {
            n: self.n,
            k: 1,
            c: (0..self.n).map(|k| self.get(i, j, k)).collect(),
        }
    }
    /// `ω_{IJ}(v)` for `v` given by its coframe components `η(v)`.
    pub fn omega_on(&self, i: usize, j: usize, eta_v: &[S]) -> S {
        let mut acc = S::zero();
        for (k, &x) in eta_v.iter().enumerate() {
            acc += self.get(i, j, k) * x;
        }
        acc
    }
}

pub fn connection_from_structure<S: Real>(sf: &StructureFunctions<S>) -> Connection<S> {
    let n = sf.n;
    let mut gamma = vec![S::zero(); n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                gamma[(i * n + j) * n + k] =
                    (sf.get(i, j, k) - sf.get(j, i, k) - sf.get(k, i, j)) * 0.5;
            }
        }
    }
    Connection { n, gamma }
}

/// Levi-Civita connection of the metric `Σ η^I ⊗ η^I`; the coframe must be
/// declared orthonormal.
pub fn levi_civita_connection<S: Real, C: CoframeField>(
    engine: DiffEngine,
    cof: &C,
    q: &[S],
) -> Result<Connection<S>> {
    if !cof.orthonormal() {
        return Err(Error::NotOrthonormal);
    }
    Ok(connection_from_structure(&structure_functions(engine, cof, q)))
}

/// Max coefficient of `dη^I + Σ_J ω_{IJ}∧η^J` in coordinates, with `dη`
/// taken directly from the coframe matrix (independent of the structure
/// functions route).
pub fn torsion_residual<C: CoframeField>(
    engine: DiffEngine,
    cof: &C,
    conn: &Connection<f64>,
    q: &[f64],
) -> f64 {
    let n = cof.dim();
    let a = cof.coframe(q);
    let da = jacobian(engine, &CoframeOf(cof), q);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        // coordinate dη^I: (∂_x A_{Iy} − ∂_y A_{Ix}) dx∧dy
        let mut d_eta = Form::<f64>::zero(n, 2);
        for x in 0..n {
            for y in x + 1..n {
                d_eta.add_at(&[x, y], da[(i * n + y, x)] - da[(i * n + x, y)]);
            }
        }
        let mut wedge_sum = Form::<f64>::zero(n, 2);
        for j in 0..n {
            let omega = frame_to_coordinate(&conn.omega(i, j), &a);
            let eta_j = Form {
                n,
                k: 1,
                c: a.row(j),
            };
            wedge_sum = wedge_sum.add(&omega.wedge(&eta_j).unwrap()).unwrap();
        }
        worst = worst.max(d_eta.add(&wedge_sum).unwrap().max_abs());
    }
    worst
}

/// Max entry of `ω + ωᵀ` (evaluated on every frame vector).
pub fn skew_residual(conn: &Connection<f64>) -> f64 {
    let n = conn.n;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                worst = worst.max((conn.get(i, j, k) + conn.get(j, i, k)).abs());
            }
        }
    }
    worst
}

/// A metric field in chart coordinates.
pub trait MetricField {
    fn metric<S: Real>(&self, q: &[S]) -> DMat<S>;
}

/// Max deviation of `g(e_i, e_j)` from `δ_ij` over the first `r` frame vectors.
pub fn orthonormality_defect<C: CoframeField, M: MetricField>(
    cof: &C,
    metric: &M,
    q: &[f64],
    r: usize,
) -> f64 {
    let b = frame(cof, q);
    let g = metric.metric(q);
    let gram = b.transpose().matmul(&g).matmul(&b);
    let mut worst: f64 = 0.0;
    for i in 0..r {
        for j in 0..r {
            let id = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - id).abs());
        }
    }
    worst
}

/// A form field on a chart; coefficients refer to whichever basis the
/// caller differentiates with.
pub trait FormField {
    fn dim(&self) -> usize;
    fn degree(&self) -> usize;
    fn eval<S: Real>(&self, q: &[S]) -> Form<S>;
}

impl<T: FormField> FormField for &T {
    fn dim(&self) -> usize {
        (*self).dim()
    }
    fn degree(&self) -> usize {
        (*self).degree()
    }
    fn eval<S: Real>(&self, q: &[S]) -> Form<S> {
        (*self).eval(q)
    }
}

struct Coefficients<'a, F>(&'a F);

impl<F: FormField> VectorFn for Coefficients<'_, F> {
    fn dim_in(&self) -> usize {
        self.0.dim()
    }
    fn dim_out(&self) -> usize {
        crate::forms::binomial(self.0.dim(), self.0.degree())
    }
    fn eval<S: Real>(&self, q: &[S]) -> Vec<S> {
        self.0.eval(q).c
    }
}

/// Exterior derivative of a form field given in the coordinate basis.
pub fn exterior_derivative<S: Real, F: FormField>(
    engine: DiffEngine,
    field: &F,
    q: &[S],
) -> Form<S> {
    let n = field.dim();
    let k = field.degree();
    let jac = jacobian(engine, &Coefficients(field), q);
    let mut out = if k < n {
        Form::zero(n, k + 1)
    } else {
        return Form {
            n,
            k: k + 1,
            c: Vec::new(),
        };
    };
    for (p, idx) in Form::<S>::multi_indices(n, k).iter().enumerate() {
        for x in 0..n {
            let mut full = vec![x];
            full.extend(idx);
            out.add_at(&full, jac[(p, x)]);
        }
    }
    out
}

/// Exterior derivative of a form field whose coefficients refer to the
/// coframe `cof`: frame derivatives of the coefficients plus the
/// structure-function terms from `dθ^I`.
pub fn exterior_derivative_frame<S: Real, F: FormField, C: CoframeField>(
    engine: DiffEngine,
    field: &F,
    cof: &C,
    q: &[S],
) -> Result<Form<S>> {
    let n = field.dim();
    if cof.dim() != n {
        return Err(Error::Basis(format!(
            "form field of dimension {n} differentiated in a coframe of dimension {}",
            cof.dim()
        )));
    }
    let k = field.degree();
    if k >= n {
        return Ok(Form {
            n,
            k: k + 1,
            c: Vec::new(),
        });
    }
    let coeff = field.eval(q);
    let jac = jacobian(engine, &Coefficients(field), q);
    let b = frame(cof, q);
    let sf = structure_functions(engine, cof, q);
    let d_theta: Vec<Form<S>> = (0..n).map(|i| sf.d_eta(i)).collect();
    let mut out = Form::zero(n, k + 1);
    for (p, idx) in Form::<S>::multi_indices(n, k).iter().enumerate() {
        // E_y(c_I) = Σ_x ∂_x c_I · B_{xy}
        for y in 0..n {
            let mut e = S::zero();
            for x in 0..n {
                e += jac[(p, x)] * b[(x, y)];
            }
            let mut full = vec![y];
            full.extend(idx);
            out.add_at(&full, e);
        }
        // c_I d(θ^{i₁}∧…∧θ^{i_k})
        for m in 0..k {
            let mut term = Form::scalar(n, coeff.c[p] * if m % 2 == 0 { 1.0 } else { -1.0 });
            for (pos, &i) in idx.iter().enumerate() {
                let factor = if pos == m {
                    d_theta[i].clone()
                } else {
                    Form::basis(n, &[i])
                };
                term = term.wedge(&factor)?;
            }
            out = out.add(&term)?;
        }
    }
    Ok(out)
}

/// Rewrites a form given in the coframe basis in coordinates:
/// coefficient on `dq^{a₁}∧…` is `Σ_I c_I det A[I; a]`.
pub fn frame_to_coordinate<S: Real>(form: &Form<S>, a: &DMat<S>) -> Form<S> {
    change_basis(form, a)
}

/// Rewrites a coordinate-basis form in the coframe basis using `B = A⁻¹`.
pub fn coordinate_to_frame<S: Real>(form: &Form<S>, b: &DMat<S>) -> Form<S> {
    change_basis(form, b)
}

/// With `θ^r = Σ_c M_{rc} φ^c`, the `φ`-coefficients are `Σ_R c_R det M[R; C]`.
fn change_basis<S: Real>(form: &Form<S>, m: &DMat<S>) -> Form<S> {
    let n = form.n;
    let k = form.k;
    let subsets = Form::<S>::multi_indices(n, k);
    let mut out = Form::zero(n, k);
    for (p, cols) in subsets.iter().enumerate() {
        let mut acc = S::zero();
        for (q, rows) in subsets.iter().enumerate() {
            let minor = if k == 0 {
                S::one()
            } else {
                m.submatrix(rows, cols).det()
            };
            acc += form.c[q] * minor;
        }
        out.c[p] = acc;
    }
    out
}

/// `i_X α` (first slot).
pub fn interior_product<S: Real>(x: &[S], form: &Form<S>) -> Result<Form<S>> {
    form.interior(x)
}

pub fn wedge<S: Real>(a: &Form<S>, b: &Form<S>) -> Result<Form<S>> {
    a.wedge(b)
}

/// Canonical 2-form on `T*Q` in the basis `(ε¹,…,εⁿ, dm₁,…,dm_n)` induced by
/// a coframe `ε` on `Q` and fibre coordinates `m_I = p(e_I)`:
/// `Ω = Σ dm_I∧ε^I + Σ_{J<K} E_{JK} ε^J∧ε^K`, `E_{JK} = Σ_I m_I c^I_{JK}`.
pub fn anholonomic_canonical_two_form<S: Real, C: CoframeField>(
    engine: DiffEngine,
    cof: &C,
    q: &[S],
    m: &[S],
) -> Form<S> {
    let sf = structure_functions(engine, cof, q);
    canonical_from_structure(&sf, m)
}

pub fn canonical_from_structure<S: Real>(sf: &StructureFunctions<S>, m: &[S]) -> Form<S> {
    let n = sf.n;
    let mut f = Form::zero(2 * n, 2);
    for i in 0..n {
        f.add_at(&[n + i, i], S::one());
    }
    for j in 0..n {
        for k in j + 1..n {
            let mut e = S::zero();
            for (i, &mi) in m.iter().enumerate() {
                e += mi * sf.get(i, j, k);
            }
            f.add_at(&[j, k], e);
        }
    }
    f
}

/// Coordinate coframe `dq^a` on `R^n`.
#[derive(Clone, Copy, Debug)]
pub struct CoordinateCoframe(pub usize);

impl CoframeField for CoordinateCoframe {
    fn dim(&self) -> usize {
        self.0
    }
    fn coframe<S: Real>(&self, _q: &[S]) -> DMat<S> {
        DMat::identity(self.0)
    }
}
