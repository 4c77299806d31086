//! Small dense symmetric solvers used by the linear models.
//!
//! Systems are feature-by-feature (D x D), so plain Cholesky plus a Jacobi
//! eigendecomposition fallback covers everything without an external BLAS.

use ndarray::{Array1, Array2};

/// Solves `a x = b` for symmetric positive definite `a` via Cholesky.
/// Returns `None` when the factorization breaks down (not PD / singular).
pub(crate) fn cholesky_solve(a: &Array2<f64>, b: &Array1<f64>) -> Option<Array1<f64>> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n);
    assert_eq!(b.len(), n);
    let mut l = a.clone();
    for j in 0..n {
        let mut d = l[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if d <= 0.0 || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        l[[j, j]] = d;
        for i in (j + 1)..n {
            let mut s = l[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / d;
        }
    }
    // forward then backward substitution
    let mut y = b.clone();
    for i in 0..n {
        for k in 0..i {
            let v = y[k];
            y[i] -= l[[i, k]] * v;
        }
        y[i] /= l[[i, i]];
    }
    let mut x = y;
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            let v = x[k];
            x[i] -= l[[k, i]] * v;
        }
        x[i] /= l[[i, i]];
    }
    Some(x)
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns `(eigenvalues, eigenvectors)` with eigenvectors in columns.
pub(crate) fn jacobi_eigh(a: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let n = a.nrows();
    assert_eq!(a.ncols(), n);
    let mut m = a.clone();
    let mut v: Array2<f64> = Array2::eye(n);
    let scale: f64 = m.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1.0);
    let tol = 1e-14 * scale;
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m[[p, q]].abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq.abs() <= tol * 1e-2 {
                    continue;
                }
                let theta = (m[[q, q]] - m[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    let eigvals = Array1::from_iter((0..n).map(|i| m[[i, i]]));
    (eigvals, v)
}

/// Minimum-norm solution of a (possibly singular) symmetric system `a x = b`,
/// computed through the eigendecomposition pseudo-inverse.
pub(crate) fn sym_min_norm_solve(a: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let (vals, vecs) = jacobi_eigh(a);
    let cutoff = 1e-10 * vals.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-300);
    let n = b.len();
    let mut x = Array1::zeros(n);
    for i in 0..n {
        if vals[i].abs() > cutoff {
            let coef = vecs.column(i).dot(b) / vals[i];
            x.scaled_add(coef, &vecs.column(i));
        }
    }
    x
}

/// Largest eigenvalue of a symmetric positive semi-definite matrix by power
/// iteration with a deterministic start vector.
pub(crate) fn top_eigenvalue(a: &Array2<f64>) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 0.0;
    }
    // mildly uneven start so it is not orthogonal to the top eigenvector
    let mut v = Array1::from_iter((0..n).map(|i| 1.0 + 0.013 * (i as f64 + 1.0)));
    let norm = v.dot(&v).sqrt();
    v.mapv_inplace(|x| x / norm);
    let mut lambda = 0.0f64;
    for _ in 0..1000 {
        let w = a.dot(&v);
        let norm = w.dot(&w).sqrt();
        if norm < 1e-300 {
            return 0.0;
        }
        let next = w.mapv(|x| x / norm);
        let estimate = next.dot(&a.dot(&next));
        v = next;
        if (estimate - lambda).abs() <= 1e-13 * estimate.abs().max(1.0) {
            return estimate;
        }
        lambda = estimate;
    }
    lambda
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn cholesky_solves_spd_system() {
        let a = array![[4.0, 1.0], [1.0, 3.0]];
        let b = array![1.0, 2.0];
        let x = cholesky_solve(&a, &b).unwrap();
        let r = a.dot(&x) - &b;
        assert!(r.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn cholesky_rejects_singular() {
        let a = array![[1.0, 1.0], [1.0, 1.0]];
        assert!(cholesky_solve(&a, &array![1.0, 0.0]).is_none());
    }

    #[test]
    fn eigh_recovers_diagonal() {
        let a = array![[2.0, 0.0], [0.0, 5.0]];
        let (vals, _) = jacobi_eigh(&a);
        let mut v: Vec<f64> = vals.to_vec();
        v.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(v[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v[1], 5.0, epsilon = 1e-12);
    }

    #[test]
    fn min_norm_solution_on_singular_system() {
        // a has rank 1; among all solutions of a x = b the minimum-norm one
        // lies in the row space: x = (0.5, 0.5).
        let a = array![[1.0, 1.0], [1.0, 1.0]];
        let b = array![1.0, 1.0];
        let x = sym_min_norm_solve(&a, &b);
        assert_abs_diff_eq!(x[0], 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(x[1], 0.5, epsilon = 1e-10);
    }

    #[test]
    fn power_iteration_matches_eigh() {
        let a = array![[3.0, 1.0, 0.0], [1.0, 2.0, 0.5], [0.0, 0.5, 1.0]];
        let (vals, _) = jacobi_eigh(&a);
        let top = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_abs_diff_eq!(top_eigenvalue(&a), top, epsilon = 1e-9);
    }
}
