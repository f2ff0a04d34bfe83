//! Pointwise values of differential forms, stored by ordered index subsets.
//!
//! A `k`-form on an `n`-dimensional space is `Σ_{I} c_I θ^{i₁}∧…∧θ^{i_k}` over
//! strictly increasing multi-indices `I`; `θ` may be a coordinate or an
//! anholonomic coframe, the value itself does not know which.

use crate::error::{Error, Result};
use crate::scalar::Real;
use std::sync::OnceLock;

pub const MAX_DIM: usize = 8;

struct Table {
    /// Subset masks for each degree in lexicographic order.
    by_degree: Vec<Vec<u16>>,
    /// Position of a mask within its degree list.
    index: Vec<usize>,
}

fn table(n: usize) -> &'static Table {
    static TABLES: OnceLock<Vec<Table>> = OnceLock::new();
    assert!(n <= MAX_DIM, "form dimension {n} exceeds {MAX_DIM}");
    &TABLES.get_or_init(|| (0..=MAX_DIM).map(build_table).collect())[n]
}

fn build_table(n: usize) -> Table {
    let mut by_degree: Vec<Vec<u16>> = vec![Vec::new(); n + 1];
    let mut all: Vec<Vec<usize>> = Vec::new();
    for mask in 0u16..(1u16 << n) {
        all.push((0..n).filter(|&i| mask & (1 << i) != 0).collect());
    }
    // lexicographic order on the sorted index lists
    let mut masks: Vec<u16> = (0u16..(1u16 << n)).collect();
    masks.sort_by(|a, b| all[*a as usize].cmp(&all[*b as usize]));
    let mut index = vec![0usize; 1 << n];
    for m in masks {
        let k = m.count_ones() as usize;
        index[m as usize] = by_degree[k].len();
        by_degree[k].push(m);
    }
    Table { by_degree, index }
}

fn mask_of(idx: &[usize]) -> u16 {
    idx.iter().fold(0u16, |m, &i| m | (1 << i))
}

fn indices_of(mask: u16, n: usize) -> Vec<usize> {
    (0..n).filter(|&i| mask & (1 << i) != 0).collect()
}

/// Sign of the permutation sorting `idx`, or `None` on a repeated index.
fn sort_sign(idx: &[usize]) -> Option<f64> {
    let mut sign = 1.0;
    for i in 0..idx.len() {
        for j in i + 1..idx.len() {
            if idx[i] == idx[j] {
                return None;
            }
            if idx[i] > idx[j] {
                sign = -sign;
            }
        }
    }
    Some(sign)
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Form<S> {
    pub n: usize,
    pub k: usize,
    pub c: Vec<S>,
}

impl<S: Real> Form<S> {
    pub fn zero(n: usize, k: usize) -> Self {
        assert!(k <= n, "degree {k} exceeds dimension {n}");
        Self {
            n,
            k,
            c: vec![S::zero(); binomial(n, k)],
        }
    }

    pub fn scalar(n: usize, v: S) -> Self {
        Self { n, k: 0, c: vec![v] }
    }

    /// Basis element `θ^{i₁}∧…∧θ^{i_k}` (indices in any order).
    pub fn basis(n: usize, idx: &[usize]) -> Self {
        let mut f = Self::zero(n, idx.len());
        f.add_at(idx, S::one());
        f
    }

    /// Sorted multi-indices in storage order.
    pub fn multi_indices(n: usize, k: usize) -> Vec<Vec<usize>> {
        table(n).by_degree[k]
            .iter()
            .map(|&m| indices_of(m, n))
            .collect()
    }

    fn slot(&self, idx: &[usize]) -> Option<(usize, f64)> {
        assert_eq!(idx.len(), self.k, "index arity must equal degree");
        let sign = sort_sign(idx)?;
        Some((table(self.n).index[mask_of(idx) as usize], sign))
    }

    /// Component on `θ^{i₁}∧…∧θ^{i_k}`; antisymmetric in the indices.
    pub fn get(&self, idx: &[usize]) -> S {
        match self.slot(idx) {
            None => S::zero(),
            Some((p, s)) => self.c[p] * s,
        }
    }

    /// Adds `v · θ^{i₁}∧…∧θ^{i_k}`.
    pub fn add_at(&mut self, idx: &[usize], v: S) {
        if let Some((p, s)) = self.slot(idx) {
            self.c[p] += v * s;
        }
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.check_same(o)?;
        let mut out = self.clone();
        for (a, &b) in out.c.iter_mut().zip(&o.c) {
            *a += b;
        }
        Ok(out)
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.add(&o.scale(S::cst(-1.0)))
    }

    pub fn scale(&self, k: S) -> Self {
        Self {
            n: self.n,
            k: self.k,
            c: self.c.iter().map(|&x| x * k).collect(),
        }
    }

    fn check_same(&self, o: &Self) -> Result<()> {
        if self.n != o.n || self.k != o.k {
            return Err(Error::Degree(format!(
                "cannot combine a {}-form on R^{} with a {}-form on R^{}",
                self.k, self.n, o.k, o.n
            )));
        }
        Ok(())
    }

    pub fn wedge(&self, o: &Self) -> Result<Self> {
        if self.n != o.n {
            return Err(Error::Degree("wedge of forms on different spaces".into()));
        }
        let n = self.n;
        let k = self.k + o.k;
        if k > n {
            // every component has a repeated index
            return Ok(Self { n, k, c: Vec::new() });
        }
        let t = table(n);
        let mut out = Self::zero(n, k);
        for (i, &ma) in t.by_degree[self.k].iter().enumerate() {
            let a = self.c[i];
            for (j, &mb) in t.by_degree[o.k].iter().enumerate() {
                if ma & mb != 0 {
                    continue;
                }
                let mut idx = indices_of(ma, n);
                idx.extend(indices_of(mb, n));
                let sign = sort_sign(&idx).unwrap();
                out.c[t.index[(ma | mb) as usize]] += a * o.c[j] * sign;
            }
        }
        Ok(out)
    }

    /// Contraction in the first slot: `(i_X α)(v₂,…) = α(X, v₂, …)`.
    pub fn interior(&self, x: &[S]) -> Result<Self> {
        if x.len() != self.n {
            return Err(Error::Degree(format!(
                "vector of length {} contracted with a form on R^{}",
                x.len(),
                self.n
            )));
        }
        if self.k == 0 {
            return Err(Error::Degree("interior product of a 0-form".into()));
        }
        let mut out = Self::zero(self.n, self.k - 1);
        for (p, j) in Self::multi_indices(self.n, self.k - 1).iter().enumerate() {
            let mut acc = S::zero();
            for (a, &xa) in x.iter().enumerate() {
                let mut idx = vec![a];
                idx.extend(j);
                acc += xa * self.get(&idx);
            }
            out.c[p] = acc;
        }
        Ok(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0, |m, x| m.max(x.value().abs()))
    }

    pub fn values(&self) -> Form<f64> {
        Form {
            n: self.n,
            k: self.k,
            c: self.c.iter().map(|x| x.value()).collect(),
        }
    }

    /// Full antisymmetric coefficient matrix of a 2-form: `M[a][b] = α(e_a, e_b)`.
    pub fn to_matrix(&self) -> crate::linalg::DMat<S> {
        assert_eq!(self.k, 2, "matrix form needs a 2-form");
        let mut m = crate::linalg::DMat::zeros(self.n, self.n);
        for a in 0..self.n {
            for b in 0..self.n {
                m[(a, b)] = self.get(&[a, b]);
            }
        }
        m
    }

    pub fn from_matrix(m: &crate::linalg::DMat<S>) -> Self {
        let mut f = Self::zero(m.rows, 2);
        for (p, ij) in Self::multi_indices(m.rows, 2).iter().enumerate() {
            f.c[p] = m[(ij[0], ij[1])];
        }
        f
    }
}
