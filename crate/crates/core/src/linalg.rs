//! Dense helpers: numerical rank, null spaces, orthonormal ranges and solves.
//!
//! Matrices are `nalgebra` types. QR and symmetric eigenvalues come from `nalgebra`; singular value
//! decompositions use one-sided Jacobi, whose singular vectors stay accurate for the square,
//! rank-deficient operator matrices met here.

use nalgebra::{DMatrix, DVector};

use crate::error::{DdrError, Result};

/// Default relative threshold below which singular values count as zero.
pub const RANK_TOL: f64 = 1e-10;

/// One-sided Jacobi SVD of `a` (`m x n`): singular values in decreasing order, the matching
/// right singular vectors as the columns of an orthogonal `n x n` matrix, and `a v_i`.
fn jacobi(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>, DMatrix<f64>) {
    let (m, n) = a.shape();
    let mut w = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (alpha, beta, gamma) = {
                    let (cp, cq) = (w.column(p), w.column(q));
                    (cp.norm_squared(), cq.norm_squared(), cp.dot(&cq))
                };
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let (x, y) = (w[(i, p)], w[(i, q)]);
                    w[(i, p)] = c * x - s * y;
                    w[(i, q)] = s * x + c * y;
                }
                for i in 0..n {
                    let (x, y) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = c * x - s * y;
                    v[(i, q)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let s = order.iter().map(|&i| norms[i]).collect();
    let vo = DMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    let wo = DMatrix::from_fn(m, n, |i, j| w[(i, order[j])]);
    (s, vo, wo)
}

/// Orthonormal columns completing the orthonormal columns of `q` to a basis, via Householder QR.
fn complete(q: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, r) = q.shape();
    if r == 0 {
        return DMatrix::identity(n, n);
    }
    let aug = hstack(&[q, &DMatrix::identity(n, n)], n);
    let full = aug.qr().q();
    full.columns(r, n - r).into_owned()
}

/// `a ≈ U_r diag(s_r) V_r^T` truncated at the numerical rank `r` for `tol`: all singular values
/// (decreasing, `min(m, n)` of them), `U_r`, and an orthogonal `V = [V_r, null space]`.
fn svd_full(a: &DMatrix<f64>, tol: f64) -> (Vec<f64>, DMatrix<f64>, DMatrix<f64>) {
    let (m, n) = a.shape();
    if m >= n {
        let (s, v, w) = jacobi(a);
        let r = numerical_rank(&s, tol);
        let mut u = DMatrix::zeros(m, r);
        for j in 0..r {
            u.set_column(j, &(w.column(j) / s[j]));
        }
        (s, u, v)
    } else {
        let (s, ut, wt) = jacobi(&a.transpose());
        let r = numerical_rank(&s, tol);
        let u = ut.columns(0, r).into_owned();
        let mut vr = DMatrix::zeros(n, r);
        for j in 0..r {
            vr.set_column(j, &(wt.column(j) / s[j]));
        }
        let v = hstack(&[&vr, &complete(&vr)], n);
        (s, u, v)
    }
}

pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    if a.nrows() >= a.ncols() {
        jacobi(a).0
    } else {
        jacobi(&a.transpose()).0
    }
}

fn cutoff(s: &[f64], tol: f64) -> f64 {
    let smax = s.iter().copied().fold(0.0, f64::max);
    tol * smax
}

/// Numerical rank with singular values below `tol * sigma_max` treated as zero.
pub fn rank(a: &DMatrix<f64>, tol: f64) -> usize {
    let s = singular_values(a);
    let c = cutoff(&s, tol);
    s.iter().filter(|&&x| x > c && x > 0.0).count()
}

/// Orthonormal basis (columns) of the null space of `a`.
pub fn null_space(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = a.ncols();
    let (_, u, v) = svd_full(a, tol);
    let r = u.ncols();
    v.columns(r, n - r).into_owned()
}

/// Orthonormal basis (columns) of the column space of `a`.
pub fn range(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    svd_full(a, tol).1
}

fn numerical_rank(s: &[f64], tol: f64) -> usize {
    let c = cutoff(s, tol);
    s.iter().filter(|&&x| x > c && x > 0.0).count()
}

/// Orthonormal basis of the orthogonal complement of the span of orthonormal columns `q`.
pub fn complement(q: &DMatrix<f64>) -> DMatrix<f64> {
    complete(q)
}

/// Ratio of extreme singular values; infinite for singular input.
pub fn condition(a: &DMatrix<f64>) -> f64 {
    let s = singular_values(a);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    }
}

/// Solves a square system by QR after checking its conditioning.
pub fn solve(a: &DMatrix<f64>, b: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    assert_eq!(a.nrows(), a.ncols(), "{what}: system must be square");
    if a.nrows() == 0 {
        return Ok(DMatrix::zeros(0, b.ncols()));
    }
    let cond = condition(a);
    if !(cond < 1e12) {
        return Err(DdrError::SingularSystem { what: what.to_string(), condition: cond });
    }
    a.clone()
        .qr()
        .solve(b)
        .ok_or_else(|| DdrError::SingularSystem { what: what.to_string(), condition: cond })
}

/// Minimum-norm least-squares solution of `a x = b` through the truncated pseudo-inverse.
pub fn lstsq_min_norm(a: &DMatrix<f64>, b: &DVector<f64>, tol: f64) -> DVector<f64> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return DVector::zeros(n);
    }
    let (s, u, v) = svd_full(a, tol);
    let mut x = DVector::zeros(n);
    for i in 0..u.ncols() {
        x += v.column(i) * (u.column(i).dot(b) / s[i]);
    }
    x
}

/// Extreme eigenvalues of a symmetric matrix.
pub fn eig_extremes(a: &DMatrix<f64>) -> (f64, f64) {
    if a.nrows() == 0 {
        return (0.0, 0.0);
    }
    let sym = (a + a.transpose()) * 0.5;
    let e = sym.symmetric_eigenvalues();
    let lo = e.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Vertically stacks matrices with equal column counts.
pub fn vstack(blocks: &[&DMatrix<f64>], ncols: usize) -> DMatrix<f64> {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(rows, ncols);
    let mut r = 0;
    for b in blocks {
        assert_eq!(b.ncols(), ncols);
        out.view_mut((r, 0), (b.nrows(), ncols)).copy_from(*b);
        r += b.nrows();
    }
    out
}

/// Horizontally stacks matrices with equal row counts.
pub fn hstack(blocks: &[&DMatrix<f64>], nrows: usize) -> DMatrix<f64> {
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(nrows, cols);
    let mut c = 0;
    for b in blocks {
        assert_eq!(b.nrows(), nrows);
        out.view_mut((0, c), (nrows, b.ncols())).copy_from(*b);
        c += b.ncols();
    }
    out
}

/// Relative residual `diff / scale`, guarded against a vanishing scale.
pub fn relative(diff: f64, scale: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else {
        diff / scale.max(f64::MIN_POSITIVE)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_wide_matrix() {
        let a = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let n = null_space(&a, RANK_TOL);
        assert_eq!(n.ncols(), 2);
        assert!((&a * &n).norm() < 1e-14);
        assert!((n.transpose() * &n - DMatrix::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn complement_completes_basis() {
        let q = DMatrix::from_column_slice(3, 1, &[0.0, 0.6, 0.8]);
        let c = complement(&q);
        assert_eq!(c.ncols(), 2);
        assert!((q.transpose() * &c).norm() < 1e-14);
    }

    #[test]
    fn min_norm_solution() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let x = lstsq_min_norm(&a, &DVector::from_vec(vec![2.0]), RANK_TOL);
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn singular_system_is_reported() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(solve(&a, &DMatrix::identity(2, 2), "test").is_err());
    }

    #[test]
    fn rank_of_empty() {
        assert_eq!(rank(&DMatrix::zeros(0, 3), RANK_TOL), 0);
        assert_eq!(null_space(&DMatrix::zeros(0, 3), RANK_TOL).ncols(), 3);
    }
}
#[cfg(test)]
mod svd_tests {
    use super::*;

    #[test]
    fn svd_reconstructs_rank_deficient_operators() {
        let cell = crate::mesh::shapes::tetrahedron().cell(0).unwrap();
        let sp = crate::polyspaces::DomainSpace::cell(&cell, 4, 8).unwrap();
        for a in [sp.curl_matrix(2, 2), sp.curl_matrix(2, 2).transpose(), sp.grad_matrix(3, 1)] {
            let (s, u, v) = svd_full(&a, RANK_TOL);
            let n = a.ncols();
            let r = u.ncols();
            let sm = DMatrix::from_diagonal(&DVector::from_row_slice(&s[..r]));
            assert!((&u * sm * v.columns(0, r).transpose() - &a).amax() < 1e-12);
            assert!((u.tr_mul(&u) - DMatrix::identity(r, r)).amax() < 1e-12);
            assert_eq!(r, rank(&a, RANK_TOL));
            assert!((v.tr_mul(&v) - DMatrix::identity(n, n)).amax() < 1e-12);
        }
    }
}
