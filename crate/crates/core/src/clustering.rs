//! K-means clustering and gap-statistic selection of the cluster count.
//!
//! [`kmeans`] runs Lloyd's algorithm from k-means++ starts (five seeded
//! restarts, lowest inertia kept). [`gap_statistic`] compares the
//! log-dispersion of the data against uniform reference draws from the
//! feature-wise bounding box and picks the smallest `k` whose gap is within
//! one standard error of the next one.

use crate::error::{Error, Result};
use crate::rng;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const RESTARTS: usize = 5;

/// Result of one k-means run.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    /// K x D centroid matrix.
    pub centroids: Array2<f64>,
    /// Cluster index of every input row.
    pub labels: Vec<usize>,
    /// Sum of squared distances from rows to their assigned centroids.
    pub inertia: f64,
}

/// Per-k gap values and the chosen cluster count.
#[derive(Debug, Clone, PartialEq)]
pub struct GapResult {
    /// `gaps[i]` is Gap(i + 1).
    pub gaps: Vec<f64>,
    /// Standard errors `s_k`, same indexing.
    pub std_errors: Vec<f64>,
    pub chosen_k: usize,
}

fn squared_distance(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

/// Index of the centroid nearest to `x` (Euclidean); ties break to the
/// lowest index.
pub fn nearest_cluster(x: ArrayView1<f64>, centroids: ArrayView2<f64>) -> usize {
    assert_eq!(
        x.len(),
        centroids.ncols(),
        "point and centroids disagree on dimension"
    );
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.rows().into_iter().enumerate() {
        let d = squared_distance(x, c);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Lloyd's algorithm with k-means++ initialization.
///
/// Runs five restarts with seeds derived from `seed` and keeps the lowest
/// inertia. Terminates a run when the largest centroid shift drops below
/// `tol` or after `max_iter` iterations. Empty clusters are reseeded to the
/// point farthest from its assigned centroid, so exactly `k` centroids come
/// back.
pub fn kmeans(
    x: ArrayView2<f64>,
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<ClusterAssignment> {
    let n = x.nrows();
    if k == 0 {
        return Err(Error::Param("cluster count must be >= 1".into()));
    }
    if n < k {
        return Err(Error::Param(format!(
            "cannot form {k} clusters from {n} rows"
        )));
    }
    let mut best: Option<ClusterAssignment> = None;
    for restart in 0..RESTARTS {
        let mut r = rng::stream(seed, "kmeans-restart", restart as u64);
        let run = lloyd(x, k, &mut r, max_iter, tol);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn lloyd(
    x: ArrayView2<f64>,
    k: usize,
    r: &mut ChaCha8Rng,
    max_iter: usize,
    tol: f64,
) -> ClusterAssignment {
    let n = x.nrows();
    let d = x.ncols();
    let mut centroids = plus_plus_init(x, k, r);
    let mut labels = vec![0usize; n];
    let mut prev_inertia = f64::INFINITY;

    for _iter in 0..max_iter.max(1) {
        // assignment step
        let mut inertia = 0.0;
        for (i, row) in x.rows().into_iter().enumerate() {
            let c = nearest_cluster(row, centroids.view());
            labels[i] = c;
            inertia += squared_distance(row, centroids.row(c));
        }
        // Lloyd monotonicity: the objective never increases across iterations.
        debug_assert!(
            inertia <= prev_inertia * (1.0 + 1e-9) + 1e-9,
            "inertia increased: {prev_inertia} -> {inertia}"
        );
        prev_inertia = inertia;

        // update step
        let mut sums = Array2::<f64>::zeros((k, d));
        let mut counts = vec![0usize; k];
        for (i, row) in x.rows().into_iter().enumerate() {
            counts[labels[i]] += 1;
            let mut s = sums.row_mut(labels[i]);
            s += &row;
        }
        let mut new_centroids = centroids.clone();
        for c in 0..k {
            if counts[c] > 0 {
                new_centroids
                    .row_mut(c)
                    .assign(&(&sums.row(c) / counts[c] as f64));
            } else {
                // reseed an empty cluster to the point farthest from its
                // assigned centroid, keeping the cluster count fixed
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = squared_distance(x.row(a), centroids.row(labels[a]));
                        let db = squared_distance(x.row(b), centroids.row(labels[b]));
                        da.total_cmp(&db)
                    })
                    .expect("n >= k >= 1");
                new_centroids.row_mut(c).assign(&x.row(far));
            }
        }
        let shift = centroids
            .rows()
            .into_iter()
            .zip(new_centroids.rows())
            .map(|(a, b)| squared_distance(a, b).sqrt())
            .fold(0.0f64, f64::max);
        centroids = new_centroids;
        if shift < tol {
            break;
        }
    }

    // final assignment against the converged centroids
    let mut inertia = 0.0;
    for (i, row) in x.rows().into_iter().enumerate() {
        let c = nearest_cluster(row, centroids.view());
        labels[i] = c;
        inertia += squared_distance(row, centroids.row(c));
    }
    ClusterAssignment {
        centroids,
        labels,
        inertia,
    }
}

/// k-means++ seeding: first centroid uniform, the rest sampled with
/// probability proportional to squared distance from the nearest chosen one.
fn plus_plus_init(x: ArrayView2<f64>, k: usize, r: &mut ChaCha8Rng) -> Array2<f64> {
    let n = x.nrows();
    let d = x.ncols();
    let mut centroids = Array2::zeros((k, d));
    let first = r.random_range(0..n);
    centroids.row_mut(0).assign(&x.row(first));
    let mut dist2: Vec<f64> = x
        .rows()
        .into_iter()
        .map(|row| squared_distance(row, centroids.row(0)))
        .collect();
    for c in 1..k {
        let total: f64 = dist2.iter().sum();
        let pick = if total <= 0.0 {
            // all remaining mass at distance zero (duplicate points)
            r.random_range(0..n)
        } else {
            let mut target = r.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in dist2.iter().enumerate() {
                target -= w;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        };
        centroids.row_mut(c).assign(&x.row(pick));
        for (i, row) in x.rows().into_iter().enumerate() {
            dist2[i] = dist2[i].min(squared_distance(row, centroids.row(c)));
        }
    }
    centroids
}

/// Gap statistic over `k = 1..=k_max` with `b` uniform reference datasets.
///
/// Reference rows are drawn uniformly from the feature-wise bounding box of
/// `x`. Chooses the smallest `k` with `Gap(k) >= Gap(k+1) - s_{k+1}`, falling
/// back to `k_max` when no `k` qualifies. Degenerate input (all rows equal)
/// short-circuits to `k = 1`.
pub fn gap_statistic(x: ArrayView2<f64>, k_max: usize, b: usize, seed: u64) -> Result<GapResult> {
    if k_max < 2 {
        return Err(Error::Param("k_max must be >= 2".into()));
    }
    if b < 1 {
        return Err(Error::Param("reference count must be >= 1".into()));
    }
    if x.nrows() < k_max {
        return Err(Error::Param(format!(
            "k_max = {k_max} exceeds the {} available rows",
            x.nrows()
        )));
    }
    let first = x.row(0);
    if x.rows().into_iter().all(|r| r == first) {
        return Ok(GapResult {
            gaps: vec![],
            std_errors: vec![],
            chosen_k: 1,
        });
    }

    let d = x.ncols();
    let lo: Vec<f64> = (0..d)
        .map(|j| x.column(j).iter().copied().fold(f64::INFINITY, f64::min))
        .collect();
    let hi: Vec<f64> = (0..d)
        .map(|j| {
            x.column(j)
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let references: Vec<Array2<f64>> = (0..b)
        .map(|i| {
            let mut r = rng::stream(seed, "gap-reference", i as u64);
            Array2::from_shape_fn((x.nrows(), d), |(_, j)| {
                lo[j] + (hi[j] - lo[j]) * r.random::<f64>()
            })
        })
        .collect();

    // log(0) guard: duplicate-heavy data can reach zero dispersion
    let log_inertia = |v: f64| v.max(1e-300).ln();

    let mut gaps = Vec::with_capacity(k_max);
    let mut std_errors = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let own = kmeans(x, k, rng::derive_seed(seed, "gap-data", k as u64), 300, 1e-10)?;
        let ref_logs: Vec<f64> = references
            .iter()
            .enumerate()
            .map(|(i, reference)| {
                let run = kmeans(
                    reference.view(),
                    k,
                    rng::derive_seed(seed, "gap-ref-run", (i * k_max + k) as u64),
                    300,
                    1e-10,
                )?;
                Ok(log_inertia(run.inertia))
            })
            .collect::<Result<_>>()?;
        let mean_ref = ref_logs.iter().sum::<f64>() / b as f64;
        let sd = (ref_logs.iter().map(|v| (v - mean_ref).powi(2)).sum::<f64>() / b as f64).sqrt();
        gaps.push(mean_ref - log_inertia(own.inertia));
        std_errors.push(sd * (1.0 + 1.0 / b as f64).sqrt());
    }

    let mut chosen_k = k_max;
    for k in 1..k_max {
        if gaps[k - 1] >= gaps[k] - std_errors[k] {
            chosen_k = k;
            break;
        }
    }
    Ok(GapResult {
        gaps,
        std_errors,
        chosen_k,
    })
}
