//! Coarse identification of a Lie algebra from constant structure functions.

use crate::exterior::StructureFunctions;
use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LieAlgebraSummary {
    pub dim: usize,
    pub center_dim: usize,
    pub derived_dim: usize,
    pub derived_abelian: bool,
    /// `dim(center ∩ [g, g])`.
    pub center_in_derived: usize,
    /// Numbers of positive, negative and zero eigenvalues of the Killing form.
    pub killing_signature: (usize, usize, usize),
    pub jacobi_residual: f64,
    /// Basis of the center in frame components.
    pub center: Vec<Vec<f64>>,
    pub name: String,
}

fn null_space(m: &DMatrix<f64>, tol: f64) -> Vec<Vec<f64>> {
    let n = m.ncols();
    // pad so the thin SVD returns a full right basis
    let mut padded = DMatrix::zeros(m.nrows().max(n), n);
    padded.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested");
    (0..n)
        .filter(|&k| svd.singular_values[k] <= tol)
        .map(|k| vt.row(k).iter().cloned().collect())
        .collect()
}

fn rank(m: &DMatrix<f64>, tol: f64) -> usize {
    if m.ncols() == 0 || m.nrows() == 0 {
        return 0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .filter(|&&s| s > tol)
        .count()
}

/// Structure constants `[X_J, X_K] = Σ_I C^I_{JK} X_I` with `C = −T`.
pub fn identify_lie_algebra(t: &StructureFunctions<f64>, tol: f64) -> LieAlgebraSummary {
    let n = t.n;
    let c = |i: usize, j: usize, k: usize| -t.get(i, j, k);
    let scale = t.c.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    let atol = tol * scale;

    // x in the center iff Σ_J x_J C^I_{JK} = 0 for all I, K
    let mut ad_rows = DMatrix::zeros(n * n, n);
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                ad_rows[(i * n + k, j)] = c(i, j, k);
            }
        }
    }
    let center = null_space(&ad_rows, atol);

    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|j| (j + 1..n).map(move |k| (j, k))).collect();
    let derived = DMatrix::from_fn(n, pairs.len(), |i, p| c(i, pairs[p].0, pairs[p].1));
    let derived_dim = rank(&derived, atol);

    let bracket = |x: &[f64], y: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let mut acc = 0.0;
                for j in 0..n {
                    for k in 0..n {
                        acc += x[j] * y[k] * c(i, j, k);
                    }
                }
                acc
            })
            .collect()
    };
    // abelian iff all brackets of bracket vectors vanish
    let mut derived_abelian = true;
    for p in 0..pairs.len() {
        for r in 0..pairs.len() {
            let x: Vec<f64> = derived.column(p).iter().cloned().collect();
            let y: Vec<f64> = derived.column(r).iter().cloned().collect();
            if bracket(&x, &y).iter().any(|v| v.abs() > atol) {
                derived_abelian = false;
            }
        }
    }

    let mut joint = DMatrix::zeros(n, center.len() + pairs.len());
    for (k, z) in center.iter().enumerate() {
        for i in 0..n {
            joint[(i, k)] = z[i];
        }
    }
    joint.view_mut((0, center.len()), (n, pairs.len())).copy_from(&derived);
    let center_in_derived = center.len() + derived_dim - rank(&joint, atol);

    // Killing form K_ab = tr(ad_a ad_b), (ad_a)_{IK} = C^I_{aK}
    let ad = |a: usize| DMatrix::from_fn(n, n, |i, k| c(i, a, k));
    let killing = DMatrix::from_fn(n, n, |a, b| (ad(a) * ad(b)).trace());
    let eig = SymmetricEigen::new(killing).eigenvalues;
    let ktol = atol * scale;
    let sig = (
        eig.iter().filter(|&&e| e > ktol).count(),
        eig.iter().filter(|&&e| e < -ktol).count(),
        eig.iter().filter(|&&e| e.abs() <= ktol).count(),
    );

    let mut jacobi_residual: f64 = 0.0;
    let unit = |a: usize| (0..n).map(|i| if i == a { 1.0 } else { 0.0 }).collect::<Vec<f64>>();
    for a in 0..n {
        for b in 0..n {
            for d in 0..n {
                let (x, y, z) = (unit(a), unit(b), unit(d));
                let s1 = bracket(&x, &bracket(&y, &z));
                let s2 = bracket(&y, &bracket(&z, &x));
                let s3 = bracket(&z, &bracket(&x, &y));
                for i in 0..n {
                    jacobi_residual = jacobi_residual.max((s1[i] + s2[i] + s3[i]).abs());
                }
            }
        }
    }

    let name = if derived_dim == 0 {
        format!("abelian R^{n}")
    } else if n == 4
        && center.len() == 1
        && derived_dim == 2
        && derived_abelian
        && center_in_derived == 0
        && sig == (0, 1, 3)
    {
        // g = center ⊕ (derived + one generator acting by a rotation)
        "se(2) ⊕ so(2)".to_string()
    } else {
        "unclassified".to_string()
    };

    LieAlgebraSummary {
        dim: n,
        center_dim: center.len(),
        derived_dim,
        derived_abelian,
        center_in_derived,
        killing_signature: sig,
        jacobi_residual,
        center,
        name,
    }
}
