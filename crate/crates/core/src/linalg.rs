//! Small dense linear-algebra helpers used throughout the crate.
//!
//! Everything here operates on `nalgebra` dynamic matrices; dimensions are
//! tiny (the asset count d), so eigendecompositions and Kronecker solves are
//! the simplest correct tools.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// (M + Mᵀ)/2.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigenvalues and eigenvectors of a symmetric matrix.
pub fn sym_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let se = m.clone().symmetric_eigen();
    (se.eigenvalues, se.eigenvectors)
}

/// (min, max) eigenvalue of a symmetric matrix.
pub fn eig_range(m: &DMatrix<f64>) -> (f64, f64) {
    let (vals, _) = sym_eigen(m);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in vals.iter() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

/// Symmetric PSD square root via eigendecomposition. Eigenvalues in
/// `[-tol, 0)` are clipped to zero; anything below `-tol` is an error.
pub fn sqrt_psd(m: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    let (vals, vecs) = sym_eigen(m);
    let mut roots = vals.clone();
    for i in 0..roots.len() {
        if roots[i] < -tol {
            return Err(Error::NotPsd { min_eig: roots[i] });
        }
        roots[i] = roots[i].max(0.0).sqrt();
    }
    Ok(&vecs * DMatrix::from_diagonal(&roots) * vecs.transpose())
}

/// Clip eigenvalues in `[-tol, 0)` to zero; error below `-tol`.
pub fn project_psd(m: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    let (vals, vecs) = sym_eigen(m);
    let mut min_eig = f64::INFINITY;
    for &v in vals.iter() {
        min_eig = min_eig.min(v);
    }
    if min_eig < -tol {
        return Err(Error::LostPositivity { min_eig });
    }
    if min_eig >= 0.0 {
        return Ok(m.clone());
    }
    let clipped = vals.map(|v| v.max(0.0));
    Ok(&vecs * DMatrix::from_diagonal(&clipped) * vecs.transpose())
}

/// Solve the continuous Lyapunov equation `K V + V Kᵀ = C` by the Kronecker
/// vectorization (I⊗K + K⊗I) vec(V) = vec(C). Fine for d ≤ a few dozen.
pub fn solve_lyapunov(k: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = k.nrows();
    let id = DMatrix::<f64>::identity(d, d);
    let big = id.kronecker(k) + k.kronecker(&id);
    let rhs = DVector::from_column_slice(c.as_slice());
    let sol = big
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NoConvergence("singular Lyapunov operator".into()))?;
    Ok(symmetrize(&DMatrix::from_column_slice(
        d,
        d,
        sol.as_slice(),
    )))
}

/// Sum of a slice by recursive pairwise reduction (stable for long
/// Monte Carlo accumulations).
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}
