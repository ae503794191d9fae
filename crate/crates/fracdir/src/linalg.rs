//! Thin wrappers around dense complex linear algebra: LU solves, SVD-based
//! pseudo-inverse solves, generalized eigendecompositions of matrix pencils,
//! and a few norms used throughout the solver modules.

use faer::c64;
use faer::linalg::solvers::{Eigen, GeneralizedEigen};
use faer::linalg::triangular_solve::{
    solve_lower_triangular_in_place, solve_upper_triangular_in_place,
};
use faer::prelude::*;
use faer::Par;
use num_complex::Complex64;

use crate::error::{FracError, Result};

pub type CMat = Mat<c64>;

pub fn from_rows(rows: &[Vec<Complex64>]) -> CMat {
    let n = rows.len();
    let m = if n == 0 { 0 } else { rows[0].len() };
    Mat::from_fn(n, m, |i, j| rows[i][j])
}

pub fn identity(n: usize) -> CMat {
    Mat::from_fn(n, n, |i, j| {
        if i == j {
            c64::new(1.0, 0.0)
        } else {
            c64::new(0.0, 0.0)
        }
    })
}

pub fn adjoint(a: &CMat) -> CMat {
    a.adjoint().to_owned()
}

pub fn mat_vec(a: &CMat, x: &[Complex64]) -> Vec<Complex64> {
    let n = a.nrows();
    let m = a.ncols();
    assert_eq!(m, x.len());
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        let mut acc = c64::new(0.0, 0.0);
        for j in 0..m {
            acc += a[(i, j)] * x[j];
        }
        out[i] = acc;
    }
    out
}

/// Solve A x = b by partial-pivot LU; rejects ill-conditioned systems by a
/// residual check.
pub fn solve(a: &CMat, b: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    assert_eq!(n, b.len());
    let rhs = Mat::from_fn(n, 1, |i, _| b[i]);
    let lu = a.partial_piv_lu();
    let x = lu.solve(&rhs);
    let res = a * &x - &rhs;
    let bn = rhs.norm_l2().max(1e-300);
    if res.norm_l2() / bn > 1e-6 {
        return Err(FracError::Numerical(format!(
            "linear solve residual {:.3e} too large (near-singular matrix)",
            res.norm_l2() / bn
        )));
    }
    Ok((0..n).map(|i| x[(i, 0)]).collect())
}

/// Minimal-norm least-squares solve via SVD with relative cutoff on the
/// singular values.
pub fn pinv_solve(a: &CMat, b: &[Complex64], rel_cutoff: f64) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    let m = a.ncols();
    assert_eq!(n, b.len());
    let svd = a
        .svd()
        .map_err(|e| FracError::Numerical(format!("svd failed: {e:?}")))?;
    let u = svd.U();
    let v = svd.V();
    let s = svd.S();
    let smax = s.column_vector()[0].re.max(1e-300);
    let mut x = vec![Complex64::new(0.0, 0.0); m];
    for k in 0..n.min(m) {
        let sk = s.column_vector()[k].re;
        if sk < rel_cutoff * smax {
            continue;
        }
        let mut proj = c64::new(0.0, 0.0);
        for i in 0..n {
            proj += u[(i, k)].conj() * b[i];
        }
        let coef = proj / sk;
        for j in 0..m {
            x[j] += coef * v[(j, k)];
        }
    }
    Ok(x)
}

/// Largest singular value.
pub fn operator_norm(a: &CMat) -> Result<f64> {
    let svd = a
        .svd()
        .map_err(|e| FracError::Numerical(format!("svd failed: {e:?}")))?;
    Ok(svd.S().column_vector()[0].re)
}

/// Smallest singular value.
pub fn min_singular_value(a: &CMat) -> Result<f64> {
    let svd = a
        .svd()
        .map_err(|e| FracError::Numerical(format!("svd failed: {e:?}")))?;
    let s = svd.S();
    Ok(s.column_vector()[a.nrows().min(a.ncols()) - 1].re)
}

/// An eigenpair of a pencil (A, B): A u = lambda B u.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda: Complex64,
    pub vector: Vec<Complex64>,
}

/// Generalized eigendecomposition of (A, B), eigenvalues sorted by real part
/// (then imaginary part). Infinite/indeterminate pairs (|beta| tiny) are
/// dropped.
pub fn generalized_eigen(a: &CMat, b: &CMat) -> Result<Vec<EigenPair>> {
    let n = a.nrows();
    let ge = GeneralizedEigen::new(a.as_ref(), b.as_ref())
        .map_err(|e| FracError::EigenSolver(format!("{e:?}")))?;
    let u = ge.U();
    let sa = ge.S_a();
    let sb = ge.S_b();
    let mut pairs = Vec::with_capacity(n);
    for k in 0..n {
        let alpha = sa.column_vector()[k];
        let beta = sb.column_vector()[k];
        if beta.norm() < 1e-12 * alpha.norm().max(1.0) {
            continue;
        }
        let lambda = alpha / beta;
        let mut vec: Vec<Complex64> = (0..n).map(|i| u[(i, k)]).collect();
        let norm = vec.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            for z in &mut vec {
                *z /= norm;
            }
        }
        pairs.push(EigenPair { lambda, vector: vec });
    }
    pairs.sort_by(|p, q| {
        (p.lambda.re, p.lambda.im)
            .partial_cmp(&(q.lambda.re, q.lambda.im))
            .unwrap()
    });
    Ok(pairs)
}

/// Plain eigendecomposition of a single matrix.
pub fn eigen(a: &CMat) -> Result<Vec<EigenPair>> {
    let n = a.nrows();
    let ev = Eigen::new(a.as_ref()).map_err(|e| FracError::EigenSolver(format!("{e:?}")))?;
    let u = ev.U();
    let s = ev.S();
    let mut pairs = Vec::with_capacity(n);
    for k in 0..n {
        let lambda = s.column_vector()[k];
        let vec: Vec<Complex64> = (0..n).map(|i| u[(i, k)]).collect();
        pairs.push(EigenPair { lambda, vector: vec });
    }
    pairs.sort_by(|p, q| {
        (p.lambda.re, p.lambda.im)
            .partial_cmp(&(q.lambda.re, q.lambda.im))
            .unwrap()
    });
    Ok(pairs)
}

/// Hermitian part (A + A^H)/2.
pub fn hermitian_part(a: &CMat) -> CMat {
    let ah = adjoint(a);
    let n = a.nrows();
    Mat::from_fn(n, n, |i, j| (a[(i, j)] + ah[(i, j)]) * 0.5)
}

/// x^H A y.
pub fn sesquilinear(a: &CMat, x: &[Complex64], y: &[Complex64]) -> Complex64 {
    let ay = mat_vec(a, y);
    x.iter()
        .zip(&ay)
        .map(|(xi, ayi)| xi.conj() * ayi)
        .sum()
}

/// Weighted inner product <x, y>_B = y^H B x (linear in x, antilinear in y).
pub fn weighted_inner(b: &CMat, x: &[Complex64], y: &[Complex64]) -> Complex64 {
    let bx = mat_vec(b, x);
    y.iter()
        .zip(&bx)
        .map(|(yi, bxi)| yi.conj() * bxi)
        .sum()
}

/// Weighted norm sqrt(Re x^H B x).
pub fn weighted_norm(b: &CMat, x: &[Complex64]) -> f64 {
    weighted_inner(b, x, x).re.max(0.0).sqrt()
}

/// Reduce the pencil (A, B) with B Hermitian positive definite to a
/// standard problem C = L^-1 A L^-H via the Cholesky factor B = L L^H.
fn cholesky_reduce(a: &CMat, b: &CMat) -> Result<(CMat, CMat)> {
    let llt = b
        .llt(faer::Side::Lower)
        .map_err(|e| FracError::EigenSolver(format!("pencil mass not positive definite: {e:?}")))?;
    let lmat = llt.L().to_owned();
    let mut y = a.clone();
    solve_lower_triangular_in_place(lmat.as_ref(), y.as_mut(), Par::Seq);
    let mut z = y.adjoint().to_owned();
    solve_lower_triangular_in_place(lmat.as_ref(), z.as_mut(), Par::Seq);
    Ok((z.adjoint().to_owned(), lmat))
}

/// Eigendecomposition of the pencil (A, B), B Hermitian positive definite,
/// by Cholesky reduction to a standard eigenproblem (more robust than QZ
/// when B is definite). Eigenvalues sorted by real part.
pub fn pencil_eigen_spd(a: &CMat, b: &CMat) -> Result<Vec<EigenPair>> {
    let n = a.nrows();
    let (c, lmat) = cholesky_reduce(a, b)?;
    let ev = Eigen::new(c.as_ref()).map_err(|e| FracError::EigenSolver(format!("{e:?}")))?;
    // back-transform: v = L^-H w
    let mut vs = ev.U().to_owned();
    solve_upper_triangular_in_place(lmat.adjoint(), vs.as_mut(), Par::Seq);
    let s = ev.S();
    let mut pairs = Vec::with_capacity(n);
    for k in 0..n {
        let mut vec: Vec<Complex64> = (0..n).map(|i| vs[(i, k)]).collect();
        let norm = vec.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            for z in &mut vec {
                *z /= norm;
            }
        }
        pairs.push(EigenPair {
            lambda: s.column_vector()[k],
            vector: vec,
        });
    }
    pairs.sort_by(|p, q| {
        (p.lambda.re, p.lambda.im)
            .partial_cmp(&(q.lambda.re, q.lambda.im))
            .unwrap()
    });
    Ok(pairs)
}

/// (min, max) eigenvalue of a Hermitian pencil (A, B) with B positive
/// definite; used for coercivity and norm certificates.
pub fn hermitian_pencil_range(a: &CMat, b: &CMat) -> Result<(f64, f64)> {
    let (c, _) = cholesky_reduce(a, b)?;
    let n = c.nrows();
    // enforce exact Hermitian symmetry before the selfadjoint solver
    let ch = hermitian_part(&c);
    let se = ch
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| FracError::EigenSolver(format!("{e:?}")))?;
    let s = se.S();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for k in 0..n {
        let v = s.column_vector()[k].re;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((lo, hi))
}

/// Smallest generalized eigenvalue of a Hermitian pencil (A, B), B positive
/// definite.
pub fn min_hermitian_pencil_eigenvalue(a: &CMat, b: &CMat) -> Result<f64> {
    hermitian_pencil_range(a, b).map(|(lo, _)| lo)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_roundtrip() {
        let n = 6;
        let a = Mat::from_fn(n, n, |i, j| {
            c64::new(
                if i == j { 3.0 } else { 0.2 / (1.0 + (i as f64 - j as f64).abs()) },
                0.1 * (i as f64 - j as f64),
            )
        });
        let x_true: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, -1.0)).collect();
        let b = mat_vec(&a, &x_true);
        let x = solve(&a, &b).unwrap();
        for (xi, ti) in x.iter().zip(&x_true) {
            assert!((xi - ti).norm() < 1e-10);
        }
    }

    #[test]
    fn generalized_eigen_diagonal_pencil() {
        let n = 4;
        let a = Mat::from_fn(n, n, |i, j| {
            if i == j {
                c64::new((i + 1) as f64, 0.0)
            } else {
                c64::new(0.0, 0.0)
            }
        });
        let b = Mat::from_fn(n, n, |i, j| {
            if i == j {
                c64::new(2.0, 0.0)
            } else {
                c64::new(0.0, 0.0)
            }
        });
        let pairs = generalized_eigen(&a, &b).unwrap();
        assert_eq!(pairs.len(), n);
        for (k, p) in pairs.iter().enumerate() {
            assert!((p.lambda.re - (k + 1) as f64 / 2.0).abs() < 1e-12);
            assert!(p.lambda.im.abs() < 1e-12);
        }
    }

    #[test]
    fn pinv_solves_singular_system() {
        // rank-1 matrix, consistent rhs
        let n = 3;
        let a = Mat::from_fn(n, n, |i, j| c64::new(((i + 1) * (j + 1)) as f64, 0.0));
        let b = vec![
            Complex64::new(2.0, 0.0),
            Complex64::new(4.0, 0.0),
            Complex64::new(6.0, 0.0),
        ];
        let x = pinv_solve(&a, &b, 1e-10).unwrap();
        let ax = mat_vec(&a, &x);
        for (axi, bi) in ax.iter().zip(&b) {
            assert!((axi - bi).norm() < 1e-10);
        }
    }
}
