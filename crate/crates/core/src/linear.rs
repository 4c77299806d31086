//! Single-task linear baselines: lasso and ridge regression.
//!
//! Both fit intercepts by centering the design matrix and targets, solve on
//! the centered problem and recover the intercept afterwards. Ridge solves
//! the normal equations `(X'X + lambda I) w = X'y`; lasso minimizes
//! `0.5 ||y - Xw||^2 + lambda ||w||_1` by cyclic coordinate descent with
//! soft-thresholding.

use crate::error::{Error, Result};
use crate::linalg;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearKind {
    Lasso,
    Ridge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub kind: LinearKind,
    pub weights: Array1<f64>,
    pub intercept: f64,
    pub lambda: f64,
    /// False when coordinate descent hit its iteration cap.
    pub converged: bool,
    /// True when an unpenalized ridge system was singular and the
    /// minimum-norm solution was used instead.
    pub singular_fallback: bool,
}

fn center(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
) -> (Array2<f64>, Array1<f64>, Array1<f64>, f64) {
    let x_mean = x.mean_axis(Axis(0)).expect("n >= 1");
    let y_mean = y.mean().expect("n >= 1");
    let xc = &x - &x_mean;
    let yc = &y - y_mean;
    (xc, yc, x_mean, y_mean)
}

fn check_shapes(x: ArrayView2<f64>, y: ArrayView1<f64>) -> Result<()> {
    if x.nrows() == 0 {
        return Err(Error::Data("cannot fit on an empty design matrix".into()));
    }
    if x.nrows() != y.len() {
        return Err(Error::Shape(format!(
            "{} rows but {} targets",
            x.nrows(),
            y.len()
        )));
    }
    Ok(())
}

/// Ridge regression. `lambda = 0` on full-rank data reproduces ordinary
/// least squares; a singular unpenalized system falls back to the
/// minimum-norm solution and sets [`LinearModel::singular_fallback`].
pub fn ridge_fit(x: &Array2<f64>, y: &Array1<f64>, lambda: f64) -> Result<LinearModel> {
    check_shapes(x.view(), y.view())?;
    if lambda < 0.0 {
        return Err(Error::Param("ridge penalty must be >= 0".into()));
    }
    let (xc, yc, x_mean, y_mean) = center(x.view(), y.view());
    let (weights, singular_fallback) = ridge_weights(&xc, &yc, lambda);
    let intercept = y_mean - weights.dot(&x_mean);
    Ok(LinearModel {
        kind: LinearKind::Ridge,
        weights,
        intercept,
        lambda,
        converged: true,
        singular_fallback,
    })
}

/// Solves `(X'X + lambda I) w = X'y` on already-centered data.
pub(crate) fn ridge_weights(
    xc: &Array2<f64>,
    yc: &Array1<f64>,
    lambda: f64,
) -> (Array1<f64>, bool) {
    let d = xc.ncols();
    let mut gram = xc.t().dot(xc);
    for i in 0..d {
        gram[[i, i]] += lambda;
    }
    let rhs = xc.t().dot(yc);
    match linalg::cholesky_solve(&gram, &rhs) {
        Some(w) => (w, false),
        None => (linalg::sym_min_norm_solve(&gram, &rhs), true),
    }
}

/// Lasso via cyclic coordinate descent. Converged when the largest
/// coordinate change in a full cycle drops below `tol`; hitting `max_iter`
/// cycles returns the best iterate with `converged = false`.
pub fn lasso_fit(
    x: &Array2<f64>,
    y: &Array1<f64>,
    lambda: f64,
    tol: f64,
    max_iter: usize,
) -> Result<LinearModel> {
    check_shapes(x.view(), y.view())?;
    if lambda < 0.0 {
        return Err(Error::Param("lasso penalty must be >= 0".into()));
    }
    let (xc, yc, x_mean, y_mean) = center(x.view(), y.view());
    let (weights, converged) = lasso_cd(&xc, &yc, lambda, tol, max_iter);
    let intercept = y_mean - weights.dot(&x_mean);
    Ok(LinearModel {
        kind: LinearKind::Lasso,
        weights,
        intercept,
        lambda,
        converged,
        singular_fallback: false,
    })
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

fn lasso_objective(residual: &Array1<f64>, w: &Array1<f64>, lambda: f64) -> f64 {
    0.5 * residual.dot(residual) + lambda * w.iter().map(|v| v.abs()).sum::<f64>()
}

/// Coordinate descent on centered data, maintaining the residual vector.
pub(crate) fn lasso_cd(
    xc: &Array2<f64>,
    yc: &Array1<f64>,
    lambda: f64,
    tol: f64,
    max_iter: usize,
) -> (Array1<f64>, bool) {
    let d = xc.ncols();
    let col_sq: Vec<f64> = (0..d).map(|j| xc.column(j).dot(&xc.column(j))).collect();
    let mut w = Array1::<f64>::zeros(d);
    let mut residual = yc.to_owned();
    let mut objective = lasso_objective(&residual, &w, lambda);
    for _cycle in 0..max_iter {
        let mut max_change = 0.0f64;
        for j in 0..d {
            if col_sq[j] <= 0.0 {
                continue; // constant column: coefficient pinned at zero
            }
            let old = w[j];
            // partial residual correlation with coordinate j
            let rho = xc.column(j).dot(&residual) + col_sq[j] * old;
            let new = soft_threshold(rho, lambda) / col_sq[j];
            if new != old {
                residual.scaled_add(old - new, &xc.column(j));
                w[j] = new;
                max_change = max_change.max((new - old).abs());
            }
        }
        // the penalized objective never increases over a full cycle
        let next_objective = lasso_objective(&residual, &w, lambda);
        debug_assert!(
            next_objective <= objective * (1.0 + 1e-12) + 1e-12,
            "coordinate descent objective increased: {objective} -> {next_objective}"
        );
        objective = next_objective;
        if max_change < tol {
            return (w, true);
        }
    }
    (w, false)
}

/// Smallest penalty for which the lasso solution on centered data is all
/// zero: `max_j |X_j' y_c|`.
pub fn lasso_lambda_max(x: &Array2<f64>, y: &Array1<f64>) -> f64 {
    let (xc, yc, _, _) = center(x.view(), y.view());
    (0..xc.ncols())
        .map(|j| xc.column(j).dot(&yc).abs())
        .fold(0.0, f64::max)
}

/// `X w + intercept`.
pub fn linear_predict(model: &LinearModel, x: &Array2<f64>) -> Result<Array1<f64>> {
    if x.ncols() != model.weights.len() {
        return Err(Error::Shape(format!(
            "model expects {} features, got {}",
            model.weights.len(),
            x.ncols()
        )));
    }
    Ok(x.dot(&model.weights) + model.intercept)
}
