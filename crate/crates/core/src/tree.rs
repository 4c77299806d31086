//! CART regression tree and random forest.
//!
//! Trees grow greedily: every split minimizes the summed squared error of the
//! two children, thresholds sit at midpoints of consecutive sorted feature
//! values, and ties break to the lowest feature index then lowest threshold
//! so construction is fully deterministic. Forests fit each tree on a
//! bootstrap resample with a fresh feature subsample per split; each tree's
//! RNG stream derives from `(seed, tree index)` so parallel and serial fits
//! agree exactly.

use crate::error::{Error, Result};
use crate::rng;
use ndarray::{Array1, Array2};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf {
        value: f64,
        count: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    fn evaluate(&self, row: ndarray::ArrayView1<f64>) -> f64 {
        match self {
            Node::Leaf { value, .. } => *value,
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if row[*feature] < *threshold {
                    left.evaluate(row)
                } else {
                    right.evaluate(row)
                }
            }
        }
    }

    fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    pub root: Node,
    pub n_features: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

#[derive(Debug, Clone)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Features considered per split; `None` means `ceil(D / 3)`.
    pub m_try: Option<usize>,
    /// `None` removes the depth limit.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// When false every tree trains on the full sample (no resampling).
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            m_try: None,
            max_depth: Some(8),
            min_samples_leaf: 5,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    pub trees: Vec<RegressionTree>,
    pub n_features: usize,
}

struct Builder<'a> {
    x: &'a Array2<f64>,
    y: &'a Array1<f64>,
    max_depth: usize,
    min_samples_leaf: usize,
    m_try: usize,
    rng: Option<ChaCha8Rng>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    sse: f64,
    left: Vec<usize>,
    right: Vec<usize>,
}

impl Builder<'_> {
    fn leaf(&self, rows: &[usize]) -> Node {
        let mean = rows.iter().map(|&i| self.y[i]).sum::<f64>() / rows.len() as f64;
        Node::Leaf {
            value: mean,
            count: rows.len(),
        }
    }

    fn build(&mut self, rows: &[usize], depth: usize) -> Node {
        if depth >= self.max_depth || rows.len() < 2 * self.min_samples_leaf {
            return self.leaf(rows);
        }
        let parent_sse = sse_of(self.y, rows);
        let features = self.candidate_features();
        let mut best: Option<BestSplit> = None;
        for feature in features {
            if let Some(split) = self.best_split_on(rows, feature) {
                let better = match &best {
                    None => split.sse < parent_sse - 1e-12 * parent_sse.max(1.0),
                    Some(b) => {
                        split.sse < b.sse
                            || (split.sse == b.sse
                                && (split.feature, split.threshold) < (b.feature, b.threshold))
                    }
                };
                if better {
                    best = Some(split);
                }
            }
        }
        match best {
            None => self.leaf(rows),
            Some(split) => {
                // every accepted split strictly reduces the node's SSE
                debug_assert!(
                    split.sse < parent_sse,
                    "split did not reduce SSE: {parent_sse} -> {}",
                    split.sse
                );
                let left = self.build(&split.left, depth + 1);
                let right = self.build(&split.right, depth + 1);
                Node::Split {
                    feature: split.feature,
                    threshold: split.threshold,
                    left: Box::new(left),
                    right: Box::new(right),
                }
            }
        }
    }

    /// The features examined at this split: all of them, or a uniform sample
    /// of `m_try` without replacement when an RNG is attached.
    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.x.ncols();
        match &mut self.rng {
            Some(r) if self.m_try < d => rand::seq::index::sample(r, d, self.m_try).into_vec(),
            _ => (0..d).collect(),
        }
    }

    fn best_split_on(&self, rows: &[usize], feature: usize) -> Option<BestSplit> {
        let mut order: Vec<usize> = rows.to_vec();
        order.sort_by(|&a, &b| {
            self.x[[a, feature]]
                .total_cmp(&self.x[[b, feature]])
                .then(a.cmp(&b))
        });
        let n = order.len();
        // prefix sums of y and y^2 along the sorted order
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let prefix: Vec<(f64, f64)> = order
            .iter()
            .map(|&i| {
                sum += self.y[i];
                sum_sq += self.y[i] * self.y[i];
                (sum, sum_sq)
            })
            .collect();
        let (total, total_sq) = prefix[n - 1];
        let sse_part = |s: f64, s2: f64, m: usize| (s2 - s * s / m as f64).max(0.0);

        let mut best: Option<(f64, f64, usize)> = None; // (sse, threshold, split_at)
        for i in 0..n - 1 {
            let a = self.x[[order[i], feature]];
            let b = self.x[[order[i + 1], feature]];
            if a == b {
                continue;
            }
            let left_n = i + 1;
            let right_n = n - left_n;
            if left_n < self.min_samples_leaf || right_n < self.min_samples_leaf {
                continue;
            }
            let (ls, ls2) = prefix[i];
            let sse = sse_part(ls, ls2, left_n) + sse_part(total - ls, total_sq - ls2, right_n);
            let threshold = a + 0.5 * (b - a);
            let better = match best {
                None => true,
                Some((bs, bt, _)) => sse < bs || (sse == bs && threshold < bt),
            };
            if better {
                best = Some((sse, threshold, left_n));
            }
        }
        best.map(|(sse, threshold, split_at)| BestSplit {
            feature,
            threshold,
            sse,
            left: order[..split_at].to_vec(),
            right: order[split_at..].to_vec(),
        })
    }
}

fn sse_of(y: &Array1<f64>, rows: &[usize]) -> f64 {
    let n = rows.len() as f64;
    let sum: f64 = rows.iter().map(|&i| y[i]).sum();
    let sum_sq: f64 = rows.iter().map(|&i| y[i] * y[i]).sum();
    (sum_sq - sum * sum / n).max(0.0)
}

/// Fits a CART regression tree. Degenerate input (constant target, depth 0)
/// yields a single-leaf tree predicting the mean.
pub fn tree_fit(
    x: &Array2<f64>,
    y: &Array1<f64>,
    max_depth: usize,
    min_samples_leaf: usize,
    _seed: u64,
) -> Result<RegressionTree> {
    if x.nrows() == 0 {
        return Err(Error::Data("cannot fit a tree on zero rows".into()));
    }
    if x.nrows() != y.len() {
        return Err(Error::Shape(format!(
            "{} rows but {} targets",
            x.nrows(),
            y.len()
        )));
    }
    let rows: Vec<usize> = (0..x.nrows()).collect();
    let mut builder = Builder {
        x,
        y,
        max_depth,
        min_samples_leaf: min_samples_leaf.max(1),
        m_try: x.ncols(),
        rng: None,
    };
    let root = builder.build(&rows, 0);
    Ok(RegressionTree {
        root,
        n_features: x.ncols(),
        max_depth,
        min_samples_leaf: min_samples_leaf.max(1),
    })
}

/// Fits a random forest; deterministic in `seed` regardless of thread count.
pub fn forest_fit(
    x: &Array2<f64>,
    y: &Array1<f64>,
    config: &ForestConfig,
    seed: u64,
) -> Result<RandomForest> {
    if x.nrows() == 0 {
        return Err(Error::Data("cannot fit a forest on zero rows".into()));
    }
    if x.nrows() != y.len() {
        return Err(Error::Shape(format!(
            "{} rows but {} targets",
            x.nrows(),
            y.len()
        )));
    }
    if config.n_trees == 0 {
        return Err(Error::Param("forest needs at least one tree".into()));
    }
    let d = x.ncols();
    let m_try = config.m_try.unwrap_or_else(|| d.div_ceil(3)).max(1);
    if m_try > d && d > 0 {
        return Err(Error::Param(format!(
            "m_try = {m_try} exceeds the {d} available features"
        )));
    }
    let max_depth = config.max_depth.unwrap_or(usize::MAX);
    let n = x.nrows();

    let trees: Vec<RegressionTree> = (0..config.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::stream(seed, "forest-tree", t as u64);
            let (bx, by);
            let (xr, yr) = if config.bootstrap {
                let idx: Vec<usize> = (0..n)
                    .map(|_| rand::Rng::random_range(&mut r, 0..n))
                    .collect();
                bx = Array2::from_shape_fn((n, d), |(i, j)| x[[idx[i], j]]);
                by = Array1::from_iter(idx.iter().map(|&i| y[i]));
                (&bx, &by)
            } else {
                (x, y)
            };
            let rows: Vec<usize> = (0..n).collect();
            let mut builder = Builder {
                x: xr,
                y: yr,
                max_depth,
                min_samples_leaf: config.min_samples_leaf.max(1),
                m_try,
                rng: Some(r),
            };
            let root = builder.build(&rows, 0);
            RegressionTree {
                root,
                n_features: d,
                max_depth,
                min_samples_leaf: config.min_samples_leaf.max(1),
            }
        })
        .collect();

    Ok(RandomForest {
        trees,
        n_features: d,
    })
}

/// Routes each row to its leaf; `value < threshold` goes left.
pub fn tree_predict(tree: &RegressionTree, x: &Array2<f64>) -> Result<Array1<f64>> {
    if x.ncols() != tree.n_features {
        return Err(Error::Shape(format!(
            "tree expects {} features, got {}",
            tree.n_features,
            x.ncols()
        )));
    }
    Ok(Array1::from_iter(
        x.rows().into_iter().map(|row| tree.root.evaluate(row)),
    ))
}

/// Arithmetic mean of the member trees' predictions.
pub fn forest_predict(forest: &RandomForest, x: &Array2<f64>) -> Result<Array1<f64>> {
    if x.ncols() != forest.n_features {
        return Err(Error::Shape(format!(
            "forest expects {} features, got {}",
            forest.n_features,
            x.ncols()
        )));
    }
    let mut acc = Array1::<f64>::zeros(x.nrows());
    for tree in &forest.trees {
        acc += &tree_predict(tree, x)?;
    }
    Ok(acc / forest.trees.len() as f64)
}

impl RegressionTree {
    pub fn depth(&self) -> usize {
        self.root.depth()
    }
}
