//! Small dense linear algebra over a generic `Real` scalar.

use crate::error::{Error, Result};
use crate::scalar::Real;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vec3<S> {
    pub x: S,
    pub y: S,
    pub z: S,
}

impl<S: Real> Vec3<S> {
    pub fn new(x: S, y: S, z: S) -> Self {
        Self { x, y, z }
    }
    pub fn zero() -> Self {
        Self::new(S::zero(), S::zero(), S::zero())
    }
    pub fn from_slice(v: &[S]) -> Self {
        Self::new(v[0], v[1], v[2])
    }
    pub fn from_f64(v: [f64; 3]) -> Self {
        Self::new(S::cst(v[0]), S::cst(v[1]), S::cst(v[2]))
    }
    pub fn to_array(self) -> [S; 3] {
        [self.x, self.y, self.z]
    }
    pub fn values(self) -> [f64; 3] {
        [self.x.value(), self.y.value(), self.z.value()]
    }
    pub fn get(&self, i: usize) -> S {
        match i {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }
    pub fn dot(self, o: Self) -> S {
        self.x * o.x + self.y * o.y + self.z * o.z
    }
    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }
    pub fn norm2(self) -> S {
        self.dot(self)
    }
    pub fn norm(self) -> S {
        self.norm2().sqrt()
    }
    pub fn scale(self, k: S) -> Self {
        Self::new(self.x * k, self.y * k, self.z * k)
    }
    pub fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
    pub fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
    pub fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
    pub fn normalized(self) -> Self {
        self.scale(self.norm().recip())
    }
}

/// Row-major 3×3 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat3<S> {
    pub m: [[S; 3]; 3],
}

impl<S: Real> Mat3<S> {
    pub fn from_rows(r0: Vec3<S>, r1: Vec3<S>, r2: Vec3<S>) -> Self {
        Self {
            m: [r0.to_array(), r1.to_array(), r2.to_array()],
        }
    }
    pub fn from_f64(m: [[f64; 3]; 3]) -> Self {
        let mut out = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                out.m[i][j] = S::cst(m[i][j]);
            }
        }
        out
    }
    pub fn zero() -> Self {
        Self { m: [[S::zero(); 3]; 3] }
    }
    pub fn identity() -> Self {
        Self::diag(Vec3::new(S::one(), S::one(), S::one()))
    }
    pub fn diag(d: Vec3<S>) -> Self {
        let mut out = Self::zero();
        out.m[0][0] = d.x;
        out.m[1][1] = d.y;
        out.m[2][2] = d.z;
        out
    }
    pub fn row(&self, i: usize) -> Vec3<S> {
        Vec3::new(self.m[i][0], self.m[i][1], self.m[i][2])
    }
    pub fn col(&self, j: usize) -> Vec3<S> {
        Vec3::new(self.m[0][j], self.m[1][j], self.m[2][j])
    }
    pub fn transpose(&self) -> Self {
        let mut out = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                out.m[i][j] = self.m[j][i];
            }
        }
        out
    }
    pub fn mul_vec(&self, v: Vec3<S>) -> Vec3<S> {
        Vec3::new(self.row(0).dot(v), self.row(1).dot(v), self.row(2).dot(v))
    }
    pub fn mul(&self, o: &Self) -> Self {
        let mut out = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = S::zero();
                for k in 0..3 {
                    acc += self.m[i][k] * o.m[k][j];
                }
                out.m[i][j] = acc;
            }
        }
        out
    }
    pub fn add(&self, o: &Self) -> Self {
        let mut out = *self;
        for i in 0..3 {
            for j in 0..3 {
                out.m[i][j] += o.m[i][j];
            }
        }
        out
    }
    pub fn scale(&self, k: S) -> Self {
        let mut out = *self;
        for row in out.m.iter_mut() {
            for x in row.iter_mut() {
                *x *= k;
            }
        }
        out
    }
    pub fn det(&self) -> S {
        self.row(0).dot(self.row(1).cross(self.row(2)))
    }
    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d.value().abs() < 1e-300 {
            return None;
        }
        // columns of the inverse are the cross products of rows over det
        let c0 = self.row(1).cross(self.row(2));
        let c1 = self.row(2).cross(self.row(0));
        let c2 = self.row(0).cross(self.row(1));
        let inv = Self::from_rows(c0, c1, c2).transpose().scale(d.recip());
        Some(inv)
    }
    pub fn values(&self) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = self.m[i][j].value();
            }
        }
        out
    }
}

/// Dense row-major matrix of arbitrary (small) size.
#[derive(Clone, Debug, PartialEq)]
pub struct DMat<S> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<S>,
}

impl<S: Real> DMat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }
    pub fn from_rows(rows: &[Vec<S>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, &x) in row.iter().enumerate() {
                m[(i, j)] = x;
            }
        }
        m
    }
    pub fn from_f64_rows(rows: &[Vec<f64>]) -> Self {
        let conv: Vec<Vec<S>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| S::cst(x)).collect())
            .collect();
        Self::from_rows(&conv)
    }
    pub fn row(&self, i: usize) -> Vec<S> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }
    pub fn col(&self, j: usize) -> Vec<S> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }
    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }
    pub fn matmul(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.rows, "shape mismatch");
        let mut out = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..o.cols {
                    out[(i, j)] += a * o[(k, j)];
                }
            }
        }
        out
    }
    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(self.cols, v.len(), "shape mismatch");
        (0..self.rows)
            .map(|i| {
                let mut acc = S::zero();
                for j in 0..self.cols {
                    acc += self[(i, j)] * v[j];
                }
                acc
            })
            .collect()
    }
    pub fn scale(&self, k: S) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * k).collect(),
        }
    }
    pub fn values(&self) -> DMat<f64> {
        DMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x.value()).collect(),
        }
    }
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.value().abs()))
    }

    /// LU factorisation with partial pivoting on the primal values.
    fn lu(&self) -> Option<(Vec<S>, Vec<usize>, bool)> {
        assert_eq!(self.rows, self.cols, "square matrix required");
        let n = self.rows;
        let mut a = self.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut odd = false;
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let mut p = k;
            let mut best = a[k * n + k].value().abs();
            for i in k + 1..n {
                let v = a[i * n + k].value().abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= 1e-14 * scale {
                return None;
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                odd = !odd;
            }
            let piv = a[k * n + k];
            for i in k + 1..n {
                let f = a[i * n + k] / piv;
                a[i * n + k] = f;
                for j in k + 1..n {
                    let t = a[k * n + j];
                    a[i * n + j] -= f * t;
                }
            }
        }
        Some((a, perm, odd))
    }

    pub fn det(&self) -> S {
        let n = self.rows;
        match self.lu() {
            None => S::zero(),
            Some((a, _, odd)) => {
                let mut d = S::one();
                for k in 0..n {
                    d *= a[k * n + k];
                }
                if odd {
                    -d
                } else {
                    d
                }
            }
        }
    }

    /// Solve `self · x = b` for each column of `b`.
    pub fn solve(&self, b: &Self) -> Result<Self> {
        let n = self.rows;
        let (a, perm, _) = self.lu().ok_or(Error::Singular {
            what: "linear system",
        })?;
        let mut out = Self::zeros(n, b.cols);
        for c in 0..b.cols {
            let mut y: Vec<S> = (0..n).map(|i| b[(perm[i], c)]).collect();
            for i in 0..n {
                for j in 0..i {
                    let t = a[i * n + j] * y[j];
                    y[i] -= t;
                }
            }
            for i in (0..n).rev() {
                for j in i + 1..n {
                    let t = a[i * n + j] * y[j];
                    y[i] -= t;
                }
                y[i] = y[i] / a[i * n + i];
            }
            for i in 0..n {
                out[(i, c)] = y[i];
            }
        }
        Ok(out)
    }

    pub fn solve_vec(&self, b: &[S]) -> Result<Vec<S>> {
        let bm = Self {
            rows: b.len(),
            cols: 1,
            data: b.to_vec(),
        };
        Ok(self.solve(&bm)?.data)
    }

    pub fn inverse(&self) -> Result<Self> {
        self.solve(&Self::identity(self.rows))
    }

    /// Rows `rs` and columns `cs` extracted into a new matrix.
    pub fn submatrix(&self, rs: &[usize], cs: &[usize]) -> Self {
        let mut out = Self::zeros(rs.len(), cs.len());
        for (i, &r) in rs.iter().enumerate() {
            for (j, &c) in cs.iter().enumerate() {
                out[(i, j)] = self[(r, c)];
            }
        }
        out
    }
}

impl DMat<f64> {
    /// Infinity-norm condition number estimate `‖A‖∞‖A⁻¹‖∞`.
    pub fn condition_inf(&self) -> f64 {
        let norm = |m: &DMat<f64>| {
            (0..m.rows)
                .map(|i| m.row(i).iter().map(|x| x.abs()).sum::<f64>())
                .fold(0.0, f64::max)
        };
        match self.inverse() {
            Ok(inv) => norm(self) * norm(&inv),
            Err(_) => f64::INFINITY,
        }
    }

    /// Numerical rank: singular values above `rel_tol · σ_max`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let sv = self.singular_values();
        let smax = sv.first().copied().unwrap_or(0.0);
        if smax <= 0.0 {
            return 0;
        }
        sv.iter().filter(|&&s| s > rel_tol * smax).count()
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        if self.rows == 0 || self.cols == 0 {
            return vec![];
        }
        let m = nalgebra::DMatrix::from_row_slice(self.rows, self.cols, &self.data);
        let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        sv
    }
}

impl<S> std::ops::Index<(usize, usize)> for DMat<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> std::ops::IndexMut<(usize, usize)> for DMat<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_roundtrip() {
        let a = DMat::<f64>::from_f64_rows(&[
            vec![2.0, 1.0, 0.0, 0.5],
            vec![0.0, 3.0, 1.0, 0.0],
            vec![1.0, 0.0, 4.0, 1.0],
            vec![0.0, 0.2, 0.0, 1.0],
        ]);
        let inv = a.inverse().unwrap();
        let id = a.matmul(&inv);
        for i in 0..4 {
            for j in 0..4 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((id[(i, j)] - e).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn det_of_permutation_is_signed() {
        let p = DMat::<f64>::from_f64_rows(&[
            vec![0.0, 1.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 0.0, 2.0],
        ]);
        assert!((p.det() + 2.0).abs() < 1e-15);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let a = DMat::<f64>::from_f64_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(a.inverse().is_err());
        assert_eq!(a.rank(1e-8), 1);
    }

    #[test]
    fn mat3_inverse_matches_dmat() {
        let m = Mat3::<f64>::from_f64([[1.0, 2.0, 0.0], [0.0, 1.0, 3.0], [4.0, 0.0, 1.0]]);
        let inv = m.inverse().unwrap();
        let prod = m.mul(&inv);
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((prod.m[i][j] - e).abs() < 1e-14);
            }
        }
    }
}
