//! Multi-task least squares with an L2,1 (column-wise group) penalty.
//!
//! The model couples T regression tasks through one T x D weight matrix `W`
//! (row t = weights of task t) and minimizes
//!
//! ```text
//! 0.5 * sum_t ||X_t w_t - y_t||^2  +  lambda * sum_d ||W[:, d]||_2
//! ```
//!
//! The penalty sums the Euclidean norms of the feature columns of `W`, so a
//! feature is either selected jointly for all tasks or dropped for all of
//! them. The loss is smooth and block-separable across tasks; the penalty is
//! separable across feature columns with a closed-form proximal map (block
//! soft-thresholding). [`mtl_fit`] therefore runs accelerated proximal
//! gradient descent (FISTA) with adaptive restart: a fixed `1/L` step from
//! the largest per-task squared spectral norm, or backtracking on request.
//!
//! Intercepts are handled by centering each task's data before solving and
//! recovering per-task offsets afterwards.

use crate::data::MultiTaskDataset;
use crate::error::{Error, Result};
use crate::linalg;
use ndarray::{Array1, Array2, ArrayView2, Axis};

/// Fitted multi-task model: one weight row and one intercept per task.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    /// T x D coefficients; row t belongs to task t.
    pub weights: Array2<f64>,
    pub intercepts: Array1<f64>,
}

impl WeightMatrix {
    pub fn n_tasks(&self) -> usize {
        self.weights.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.weights.ncols()
    }

    /// Feature columns with at least one nonzero coefficient.
    pub fn active_columns(&self) -> Vec<usize> {
        (0..self.n_features())
            .filter(|&d| self.weights.column(d).iter().any(|&v| v != 0.0))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepRule {
    /// Fixed step `1/L`, `L = max_t sigma_max(X_t)^2` by power iteration.
    FixedInverseL,
    /// Halving line search on the proximal-gradient descent condition.
    Backtracking,
}

#[derive(Debug, Clone)]
pub struct MtlFitConfig {
    /// Penalty strength; zero solves independent least squares per task.
    pub lambda: f64,
    /// Relative objective change below which the solver stops.
    pub tol: f64,
    pub max_iter: usize,
    pub step_rule: StepRule,
    /// Weight each task's loss by `1/(2 n_t)` instead of `1/2`; off by
    /// default to keep all tasks on the plain summed loss.
    pub per_task_weighting: bool,
    /// Starting point (T x D), e.g. the solution at a neighbouring lambda.
    pub warm_start: Option<Array2<f64>>,
}

impl MtlFitConfig {
    pub fn new(lambda: f64) -> MtlFitConfig {
        MtlFitConfig {
            lambda,
            tol: 1e-9,
            max_iter: 5000,
            step_rule: StepRule::FixedInverseL,
            per_task_weighting: false,
            warm_start: None,
        }
    }
}

/// Objective history of one solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct FitTrace {
    /// Objective at the starting point followed by every accepted iterate
    /// (values are on the centered problem).
    pub objectives: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

fn check_weight_shape(w: ArrayView2<f64>, ds: &MultiTaskDataset) -> Result<()> {
    if w.nrows() != ds.n_tasks() || w.ncols() != ds.n_features() {
        return Err(Error::Shape(format!(
            "weight matrix is {}x{}, dataset has {} tasks and {} features",
            w.nrows(),
            w.ncols(),
            ds.n_tasks(),
            ds.n_features()
        )));
    }
    Ok(())
}

/// Penalty value: sum over feature columns of the column's Euclidean norm.
pub fn l21_norm(w: ArrayView2<f64>) -> f64 {
    (0..w.ncols())
        .map(|d| w.column(d).dot(&w.column(d)).sqrt())
        .sum()
}

/// Full objective on the dataset as given (no centering):
/// `0.5 * sum_t ||X_t w_t - y_t||^2 + lambda * l21_norm(W)`.
pub fn mtl_objective(w: ArrayView2<f64>, ds: &MultiTaskDataset, lambda: f64) -> Result<f64> {
    check_weight_shape(w, ds)?;
    let mut loss = 0.0;
    for (t, task) in ds.tasks.iter().enumerate() {
        let r = task.x.dot(&w.row(t)) - &task.y;
        loss += 0.5 * r.dot(&r);
    }
    Ok(loss + lambda * l21_norm(w))
}

/// Gradient of the smooth loss: row t is `X_t' (X_t w_t - y_t)`.
pub fn mtl_smooth_grad(w: ArrayView2<f64>, ds: &MultiTaskDataset) -> Result<Array2<f64>> {
    check_weight_shape(w, ds)?;
    let mut grad = Array2::zeros((ds.n_tasks(), ds.n_features()));
    for (t, task) in ds.tasks.iter().enumerate() {
        let r = task.x.dot(&w.row(t)) - &task.y;
        grad.row_mut(t).assign(&task.x.t().dot(&r));
    }
    Ok(grad)
}

/// Proximal map of `tau * l21_norm`: each feature column of `v` with norm
/// `r` is scaled by `max(0, 1 - tau / r)`; zero columns stay zero.
pub fn mtl_prox(v: ArrayView2<f64>, tau: f64) -> Array2<f64> {
    assert!(tau >= 0.0, "prox threshold must be non-negative");
    let mut out = v.to_owned();
    for mut col in out.columns_mut() {
        let norm = col.dot(&col).sqrt();
        let scale = if norm > tau { 1.0 - tau / norm } else { 0.0 };
        col.mapv_inplace(|x| x * scale);
    }
    out
}

/// Per-task second-order data on the centered problem. The loss, gradient
/// and Lipschitz constant only need `X'X`, `X'y` and `y'y`, which makes each
/// solver iteration O(T * D^2) regardless of sample counts.
struct CenteredProblem {
    grams: Vec<Array2<f64>>,
    xty: Vec<Array1<f64>>,
    yty: f64,
    x_means: Vec<Array1<f64>>,
    y_means: Vec<f64>,
    n_tasks: usize,
    n_features: usize,
}

impl CenteredProblem {
    fn build(ds: &MultiTaskDataset, per_task_weighting: bool) -> CenteredProblem {
        let d = ds.n_features();
        let mut grams = Vec::with_capacity(ds.n_tasks());
        let mut xty = Vec::with_capacity(ds.n_tasks());
        let mut yty = 0.0;
        let mut x_means = Vec::with_capacity(ds.n_tasks());
        let mut y_means = Vec::with_capacity(ds.n_tasks());
        for task in &ds.tasks {
            let x_mean = task.x.mean_axis(Axis(0)).expect("task has rows");
            let y_mean = task.y.mean().expect("task has rows");
            let xc = &task.x - &x_mean;
            let yc = &task.y - y_mean;
            let scale = if per_task_weighting {
                1.0 / task.x.nrows() as f64
            } else {
                1.0
            };
            grams.push(xc.t().dot(&xc) * scale);
            xty.push(xc.t().dot(&yc) * scale);
            yty += yc.dot(&yc) * scale;
            x_means.push(x_mean);
            y_means.push(y_mean);
        }
        CenteredProblem {
            grams,
            xty,
            yty,
            x_means,
            y_means,
            n_tasks: ds.n_tasks(),
            n_features: d,
        }
    }

    fn smooth_value(&self, w: &Array2<f64>) -> f64 {
        let mut v = 0.5 * self.yty;
        for t in 0..self.n_tasks {
            let wt = w.row(t);
            v += 0.5 * wt.dot(&self.grams[t].dot(&wt)) - self.xty[t].dot(&wt);
        }
        v
    }

    fn smooth_grad(&self, w: &Array2<f64>) -> Array2<f64> {
        let mut grad = Array2::zeros((self.n_tasks, self.n_features));
        for t in 0..self.n_tasks {
            grad.row_mut(t)
                .assign(&(self.grams[t].dot(&w.row(t)) - &self.xty[t]));
        }
        grad
    }

    /// `max_t` largest eigenvalue of the task Gram matrices.
    fn lipschitz(&self) -> f64 {
        self.grams
            .iter()
            .map(linalg::top_eigenvalue)
            .fold(0.0, f64::max)
    }

    /// Column-group bound: above it the all-zero matrix is optimal.
    fn lambda_max(&self) -> f64 {
        (0..self.n_features)
            .map(|d| {
                self.xty
                    .iter()
                    .map(|c| c[d] * c[d])
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// Smallest penalty for which the fitted weight matrix is exactly zero:
/// `max_d sqrt(sum_t (X_t' y_t)_d^2)` on per-task centered data.
pub fn mtl_lambda_max(ds: &MultiTaskDataset) -> Result<f64> {
    if ds.tasks.is_empty() {
        return Err(Error::Data("dataset has no tasks".into()));
    }
    Ok(CenteredProblem::build(ds, false).lambda_max())
}

/// Fits the model by FISTA with adaptive restart.
///
/// Stops when the relative objective change drops below `tol` or after
/// `max_iter` iterations (returning the best iterate with
/// `converged = false`). A non-finite objective aborts with the trace
/// collected so far.
pub fn mtl_fit(ds: &MultiTaskDataset, cfg: &MtlFitConfig) -> Result<(WeightMatrix, FitTrace)> {
    if cfg.lambda < 0.0 {
        return Err(Error::Param("penalty must be >= 0".into()));
    }
    if cfg.tol <= 0.0 {
        return Err(Error::Param("tolerance must be > 0".into()));
    }
    let t = ds.n_tasks();
    let d = ds.n_features();
    let problem = CenteredProblem::build(ds, cfg.per_task_weighting);

    let objective = |w: &Array2<f64>| problem.smooth_value(w) + cfg.lambda * l21_norm(w.view());

    let mut x = match &cfg.warm_start {
        Some(w0) => {
            if w0.nrows() != t || w0.ncols() != d {
                return Err(Error::Shape(format!(
                    "warm start is {}x{}, expected {t}x{d}",
                    w0.nrows(),
                    w0.ncols()
                )));
            }
            w0.clone()
        }
        None => Array2::zeros((t, d)),
    };

    let lipschitz = problem.lipschitz();
    let mut trace = FitTrace {
        objectives: vec![objective(&x)],
        converged: false,
        iterations: 0,
    };
    if !trace.objectives[0].is_finite() {
        return Err(Error::Numeric {
            message: "objective is not finite at the starting point".into(),
            objectives: trace.objectives,
        });
    }
    if lipschitz <= 1e-300 {
        // No curvature anywhere: the smooth part is constant, so the penalty
        // alone decides and the minimizer is the all-zero matrix.
        let x = Array2::zeros((t, d));
        trace.objectives.push(objective(&x));
        trace.converged = true;
        return Ok((finish(x, &problem), trace));
    }
    // tiny headroom over the power-iteration estimate
    let base_step = 1.0 / (lipschitz * (1.0 + 1e-9));

    let mut y = x.clone();
    let mut theta = 1.0f64;
    let mut f_x = trace.objectives[0];
    let mut step = base_step;

    for iter in 1..=cfg.max_iter {
        let mut grad = problem.smooth_grad(&y);
        let mut z = match cfg.step_rule {
            StepRule::FixedInverseL => mtl_prox((&y - &(&grad * step)).view(), step * cfg.lambda),
            StepRule::Backtracking => backtrack(&problem, &y, &grad, &mut step, cfg.lambda),
        };
        let mut f_z = objective(&z);
        if f_z > f_x {
            // momentum overshot: restart from the last accepted iterate
            theta = 1.0;
            grad = problem.smooth_grad(&x);
            z = match cfg.step_rule {
                StepRule::FixedInverseL => {
                    mtl_prox((&x - &(&grad * step)).view(), step * cfg.lambda)
                }
                StepRule::Backtracking => backtrack(&problem, &x, &grad, &mut step, cfg.lambda),
            };
            f_z = objective(&z);
        }
        if !f_z.is_finite() {
            return Err(Error::Numeric {
                message: format!("objective became non-finite at iteration {iter}"),
                objectives: trace.objectives,
            });
        }
        // descent holds for proximal steps from an accepted point at 1/L
        debug_assert!(
            f_z <= f_x + 1e-9 * f_x.abs().max(1.0),
            "objective increased on an accepted iterate: {f_x} -> {f_z}"
        );

        let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        let momentum = (theta - 1.0) / theta_next;
        y = &z + &((&z - &x) * momentum);
        let rel_change = (f_x - f_z).abs() / f_x.abs().max(1.0);
        x = z;
        f_x = f_z;
        theta = theta_next;
        trace.objectives.push(f_z);
        trace.iterations = iter;
        if rel_change < cfg.tol {
            trace.converged = true;
            break;
        }
    }

    Ok((finish(x, &problem), trace))
}

/// Halve the step until the proximal-gradient descent condition
/// `f(z) <= f(y) + <g, z - y> + ||z - y||^2 / (2 step)` holds.
fn backtrack(
    problem: &CenteredProblem,
    y: &Array2<f64>,
    grad: &Array2<f64>,
    step: &mut f64,
    lambda: f64,
) -> Array2<f64> {
    let f_y = problem.smooth_value(y);
    loop {
        let z = mtl_prox((y - &(grad * *step)).view(), *step * lambda);
        let dz = &z - y;
        let quad = f_y + grad.iter().zip(dz.iter()).map(|(g, d)| g * d).sum::<f64>()
            + dz.iter().map(|d| d * d).sum::<f64>() / (2.0 * *step);
        if problem.smooth_value(&z) <= quad + 1e-12 * quad.abs().max(1.0) || *step < 1e-18 {
            return z;
        }
        *step *= 0.5;
    }
}

fn finish(weights: Array2<f64>, problem: &CenteredProblem) -> WeightMatrix {
    let intercepts = Array1::from_iter(
        (0..problem.n_tasks)
            .map(|t| problem.y_means[t] - weights.row(t).dot(&problem.x_means[t])),
    );
    WeightMatrix {
        weights,
        intercepts,
    }
}

/// Predicts `X w_task + intercept_task`. The task index must refer to a task
/// the model was trained on; there is deliberately no fallback for unseen
/// tasks.
pub fn mtl_predict(model: &WeightMatrix, task: usize, x: &Array2<f64>) -> Result<Array1<f64>> {
    if task >= model.n_tasks() {
        return Err(Error::UnknownTask(format!(
            "task index {task} out of range (model has {} tasks)",
            model.n_tasks()
        )));
    }
    if x.ncols() != model.n_features() {
        return Err(Error::Shape(format!(
            "model expects {} features, got {}",
            model.n_features(),
            x.ncols()
        )));
    }
    Ok(x.dot(&model.weights.row(task)) + model.intercepts[task])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::TaskData;
    use crate::linear;
    use crate::rng;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn dataset(tasks: Vec<(Array2<f64>, Array1<f64>)>) -> MultiTaskDataset {
        let d = tasks[0].0.ncols();
        MultiTaskDataset::new(
            tasks
                .into_iter()
                .enumerate()
                .map(|(i, (x, y))| TaskData {
                    label: format!("t{i:03}"),
                    x,
                    y,
                })
                .collect(),
            (0..d).map(|j| format!("f{j}")).collect(),
        )
        .unwrap()
    }

    fn random_dataset(t: usize, n: usize, d: usize, seed: u64) -> MultiTaskDataset {
        let mut r = rng::stream(seed, "mtl-test-data", 0);
        dataset(
            (0..t)
                .map(|_| {
                    let x = Array2::from_shape_fn((n, d), |_| r.sample::<f64, _>(StandardNormal));
                    let w = Array1::from_shape_fn(d, |_| r.sample::<f64, _>(StandardNormal));
                    let y = x.dot(&w)
                        + Array1::from_shape_fn(n, |_| 0.3 * r.sample::<f64, _>(StandardNormal));
                    (x, y)
                })
                .collect(),
        )
    }

    #[test]
    fn objective_hand_values() {
        let ds = dataset(vec![(array![[1.0]], array![2.0])]);
        // w = 1: 0.5 (1 - 2)^2 + 1 * |1| = 1.5
        let w = array![[1.0]];
        assert_abs_diff_eq!(
            mtl_objective(w.view(), &ds, 1.0).unwrap(),
            1.5,
            epsilon = 1e-12
        );
        // zero weights: 0.5 * sum ||y||^2 regardless of lambda
        let zero = Array2::zeros((1, 1));
        assert_abs_diff_eq!(
            mtl_objective(zero.view(), &ds, 123.0).unwrap(),
            2.0,
            epsilon = 1e-12
        );
        // lambda = 0: pure loss
        assert_abs_diff_eq!(
            mtl_objective(w.view(), &ds, 0.0).unwrap(),
            0.5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn objective_rejects_bad_shapes() {
        let ds = dataset(vec![(array![[1.0]], array![2.0])]);
        let w = Array2::zeros((2, 1));
        assert!(matches!(
            mtl_objective(w.view(), &ds, 0.0),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn prox_identity_at_zero_threshold() {
        let v = array![[1.0, -2.0], [3.0, 0.5]];
        assert_eq!(mtl_prox(v.view(), 0.0), v);
    }

    #[test]
    fn prox_closed_form_column() {
        // column (3, 4) has norm 5; threshold 2 scales it by 0.6
        let v = array![[3.0], [4.0]];
        let z = mtl_prox(v.view(), 2.0);
        assert_abs_diff_eq!(z[[0, 0]], 1.8, epsilon = 1e-12);
        assert_abs_diff_eq!(z[[1, 0]], 2.4, epsilon = 1e-12);
    }

    #[test]
    fn prox_kills_small_columns() {
        let v = array![[0.3], [0.4]];
        let z = mtl_prox(v.view(), 0.5);
        assert!(z.iter().all(|&x| x == 0.0));
        let exact = mtl_prox(v.view(), 0.5 - 1e-16);
        assert!(exact.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn prox_beats_random_perturbations() {
        let mut r = rng::stream(21, "prox-perturb", 0);
        for trial in 0..5 {
            let t = 1 + (trial % 3);
            let d = 2 + (trial % 4);
            let v = Array2::from_shape_fn((t, d), |_| 2.0 * r.sample::<f64, _>(StandardNormal));
            let tau: f64 = r.random::<f64>() * 1.5;
            let z = mtl_prox(v.view(), tau);
            let value = |m: &Array2<f64>| {
                let diff = m - &v;
                0.5 * diff.iter().map(|x| x * x).sum::<f64>() + tau * l21_norm(m.view())
            };
            let base = value(&z);
            for _ in 0..10_000 {
                let scale = 10f64.powf(r.random::<f64>() * 3.0 - 3.0);
                let candidate = &z
                    + &Array2::from_shape_fn((t, d), |_| {
                        scale * r.sample::<f64, _>(StandardNormal)
                    });
                assert!(value(&candidate) >= base - 1e-12);
            }
        }
    }

    #[test]
    fn lambda_max_trivial_cases() {
        let zero_targets = dataset(vec![
            (array![[1.0], [2.0]], array![0.0, 0.0]),
            (array![[3.0], [4.0]], array![0.0, 0.0]),
        ]);
        assert_abs_diff_eq!(mtl_lambda_max(&zero_targets).unwrap(), 0.0, epsilon = 1e-12);

        // one task: reduces to the single-task bound max_d |X_d' y_c|
        let ds = random_dataset(1, 12, 3, 5);
        let expected = linear::lasso_lambda_max(&ds.tasks[0].x, &ds.tasks[0].y);
        assert_abs_diff_eq!(mtl_lambda_max(&ds).unwrap(), expected, epsilon = 1e-10);
    }

    #[test]
    fn fit_above_lambda_max_is_exactly_zero() {
        let ds = random_dataset(2, 10, 3, 6);
        let lmax = mtl_lambda_max(&ds).unwrap();
        let (model, trace) = mtl_fit(&ds, &MtlFitConfig::new(1.01 * lmax)).unwrap();
        assert!(model.weights.iter().all(|&w| w == 0.0));
        assert!(trace.converged);
        // strictly below the bound something activates
        let (below, _) = mtl_fit(&ds, &MtlFitConfig::new(0.5 * lmax)).unwrap();
        assert!(below.weights.iter().any(|&w| w != 0.0));
    }

    #[test]
    fn unpenalized_single_task_matches_least_squares() {
        let ds = random_dataset(1, 30, 4, 7);
        let mut cfg = MtlFitConfig::new(0.0);
        cfg.tol = 1e-14;
        cfg.max_iter = 50_000;
        let (model, _) = mtl_fit(&ds, &cfg).unwrap();
        let ols = linear::ridge_fit(&ds.tasks[0].x, &ds.tasks[0].y, 0.0).unwrap();
        for (a, b) in model.weights.row(0).iter().zip(&ols.weights) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-6);
        }
        assert_abs_diff_eq!(model.intercepts[0], ols.intercept, epsilon = 1e-6);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let ds = random_dataset(2, 6, 3, 8);
        let mut r = rng::stream(9, "grad-check", 0);
        let w = Array2::from_shape_fn((2, 3), |_| r.sample::<f64, _>(StandardNormal));
        let grad = mtl_smooth_grad(w.view(), &ds).unwrap();
        let h = 1e-5;
        for t in 0..2 {
            for d in 0..3 {
                let mut plus = w.clone();
                plus[[t, d]] += h;
                let mut minus = w.clone();
                minus[[t, d]] -= h;
                let fd = (mtl_objective(plus.view(), &ds, 0.0).unwrap()
                    - mtl_objective(minus.view(), &ds, 0.0).unwrap())
                    / (2.0 * h);
                let rel = (grad[[t, d]] - fd).abs() / grad[[t, d]].abs().max(1.0);
                assert!(rel < 1e-4, "entry ({t},{d}): {} vs {fd}", grad[[t, d]]);
            }
        }
    }

    #[test]
    fn trace_is_monotone_and_converges() {
        let ds = random_dataset(3, 15, 4, 10);
        let lmax = mtl_lambda_max(&ds).unwrap();
        let (_, trace) = mtl_fit(&ds, &MtlFitConfig::new(0.2 * lmax)).unwrap();
        assert!(trace.converged);
        for pair in trace.objectives.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-9 * pair[0].abs().max(1.0));
        }
        assert!(trace.objectives.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn backtracking_reaches_the_same_objective() {
        let ds = random_dataset(2, 12, 3, 11);
        let lmax = mtl_lambda_max(&ds).unwrap();
        let mut fixed_cfg = MtlFitConfig::new(0.3 * lmax);
        fixed_cfg.tol = 1e-12;
        let (fixed, _) = mtl_fit(&ds, &fixed_cfg).unwrap();
        let mut bt_cfg = fixed_cfg.clone();
        bt_cfg.step_rule = StepRule::Backtracking;
        let (bt, _) = mtl_fit(&ds, &bt_cfg).unwrap();
        let fa = mtl_objective(fixed.weights.view(), &ds, 0.3 * lmax).unwrap();
        let fb = mtl_objective(bt.weights.view(), &ds, 0.3 * lmax).unwrap();
        assert_abs_diff_eq!(fa, fb, epsilon = 1e-6 * fa.abs().max(1.0));
    }

    /// At the solution, nonzero columns must be uniform scalings of the
    /// pre-prox columns: block soft-thresholding never zeroes individual
    /// entries inside a surviving feature group.
    #[test]
    fn solution_columns_are_never_partially_thresholded() {
        let ds = random_dataset(3, 10, 5, 12);
        let lmax = mtl_lambda_max(&ds).unwrap();
        let lambda = 0.4 * lmax;
        let mut cfg = MtlFitConfig::new(lambda);
        cfg.tol = 1e-14;
        cfg.max_iter = 100_000;
        let (model, _) = mtl_fit(&ds, &cfg).unwrap();

        let problem = CenteredProblem::build(&ds, false);
        let step = 1.0 / (problem.lipschitz() * (1.0 + 1e-9));
        let v = &model.weights - &(problem.smooth_grad(&model.weights) * step);
        let tau = step * lambda;
        // fixed point of the proximal step
        let z = mtl_prox(v.view(), tau);
        let drift = (&z - &model.weights)
            .iter()
            .map(|x| x.abs())
            .fold(0.0, f64::max);
        assert!(drift < 1e-7, "not at a fixed point: {drift}");
        for dcol in 0..5 {
            let col = model.weights.column(dcol);
            let norm = col.dot(&col).sqrt();
            if norm == 0.0 {
                continue;
            }
            let vcol = v.column(dcol);
            let vnorm = vcol.dot(&vcol).sqrt();
            let scale = 1.0 - tau / vnorm;
            for (w, vv) in col.iter().zip(vcol.iter()) {
                assert!(
                    (w - scale * vv).abs() <= 1e-10 * vnorm.max(1.0),
                    "column {dcol} partially thresholded"
                );
            }
        }
    }

    #[test]
    fn sparsity_endpoints() {
        let ds = random_dataset(2, 20, 4, 13);
        let lmax = mtl_lambda_max(&ds).unwrap();
        let (at_max, _) = mtl_fit(&ds, &MtlFitConfig::new(lmax * 1.0000001)).unwrap();
        assert!(at_max.active_columns().is_empty());
        let mut cfg = MtlFitConfig::new(0.0);
        cfg.tol = 1e-13;
        cfg.max_iter = 50_000;
        let (free, _) = mtl_fit(&ds, &cfg).unwrap();
        assert_eq!(free.active_columns().len(), 4);
    }

    #[test]
    fn fit_is_deterministic() {
        let ds = random_dataset(3, 8, 3, 14);
        let cfg = MtlFitConfig::new(0.1);
        let (a, ta) = mtl_fit(&ds, &cfg).unwrap();
        let (b, tb) = mtl_fit(&ds, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
    }

    #[test]
    fn iteration_cap_is_flagged() {
        let ds = random_dataset(2, 10, 3, 15);
        let mut cfg = MtlFitConfig::new(0.01);
        cfg.max_iter = 2;
        cfg.tol = 1e-16;
        let (_, trace) = mtl_fit(&ds, &cfg).unwrap();
        assert!(!trace.converged);
        assert_eq!(trace.iterations, 2);
    }

    #[test]
    fn predict_examples() {
        let model = WeightMatrix {
            weights: array![[1.0, -1.0], [0.0, 0.0]],
            intercepts: array![0.1, 5.0],
        };
        let out = mtl_predict(&model, 0, &array![[0.5, 0.25]]).unwrap();
        assert_abs_diff_eq!(out[0], 0.35, epsilon = 1e-12);

        // zero weights: constant intercept
        let out = mtl_predict(&model, 1, &array![[3.0, 4.0], [5.0, 6.0]]).unwrap();
        assert!(out.iter().all(|&v| v == 5.0));

        // identity inputs with zero intercept return the weight row
        let eye_model = WeightMatrix {
            weights: array![[2.0, 3.0]],
            intercepts: array![0.0],
        };
        let out = mtl_predict(&eye_model, 0, &array![[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(out.to_vec(), vec![2.0, 3.0]);

        assert!(matches!(
            mtl_predict(&model, 7, &array![[1.0, 2.0]]),
            Err(Error::UnknownTask(_))
        ));
        assert!(matches!(
            mtl_predict(&model, 0, &array![[1.0]]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn warm_start_shape_is_checked() {
        let ds = random_dataset(2, 5, 2, 16);
        let mut cfg = MtlFitConfig::new(0.1);
        cfg.warm_start = Some(Array2::zeros((3, 2)));
        assert!(matches!(mtl_fit(&ds, &cfg), Err(Error::Shape(_))));
    }
}
