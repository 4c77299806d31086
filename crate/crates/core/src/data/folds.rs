//! Task-stratified k-fold splitting.

use super::dataset::{MultiTaskDataset, TaskData};
use crate::error::{Error, Result};
use crate::rng;
use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;

/// Splits every task's rows into `k` folds and returns `(train, test)` pairs.
///
/// Rows are stratified per task: each task's shuffled rows are dealt into `k`
/// chunks, so the test folds partition each task's rows and every task keeps
/// at least one training row in every fold. Tasks with fewer than `k` rows
/// contribute test rows to only their first `n_t` folds; tasks with a single
/// row stay in training everywhere. Deterministic in `seed`.
pub fn split_folds(
    ds: &MultiTaskDataset,
    k: usize,
    seed: u64,
) -> Result<Vec<(MultiTaskDataset, MultiTaskDataset)>> {
    if k < 2 {
        return Err(Error::Param(format!("fold count must be >= 2, got {k}")));
    }
    // Per-task shuffled row order; the RNG stream is tied to the task index
    // so the assignment does not depend on other tasks.
    let orders: Vec<Vec<usize>> = ds
        .tasks
        .iter()
        .enumerate()
        .map(|(t, task)| {
            let mut idx: Vec<usize> = (0..task.x.nrows()).collect();
            idx.shuffle(&mut rng::stream(seed, "fold-shuffle", t as u64));
            idx
        })
        .collect();

    let mut folds = Vec::with_capacity(k);
    for f in 0..k {
        let mut train_tasks = Vec::new();
        let mut test_tasks = Vec::new();
        for (task, order) in ds.tasks.iter().zip(&orders) {
            let n = order.len();
            let (start, end) = chunk_bounds(n, k, f);
            let test_idx = &order[start..end];
            let train_idx: Vec<usize> = order[..start]
                .iter()
                .chain(&order[end..])
                .copied()
                .collect();
            debug_assert!(!train_idx.is_empty());
            train_tasks.push(take_rows(task, &train_idx));
            if !test_idx.is_empty() {
                test_tasks.push(take_rows(task, test_idx));
            }
        }
        let train = MultiTaskDataset::new(train_tasks, ds.feature_names.clone())?;
        let test = MultiTaskDataset {
            tasks: test_tasks,
            feature_names: ds.feature_names.clone(),
        };
        folds.push((train, test));
    }
    Ok(folds)
}

/// Bounds of fold `f`'s chunk in a length-`n` sequence. Single-row tasks get
/// empty chunks everywhere so they are never tested on.
fn chunk_bounds(n: usize, k: usize, f: usize) -> (usize, usize) {
    if n < 2 {
        return (0, 0);
    }
    let base = n / k;
    let rem = n % k;
    let start = f * base + f.min(rem);
    let size = base + usize::from(f < rem);
    (start, (start + size).min(n))
}

fn take_rows(task: &TaskData, idx: &[usize]) -> TaskData {
    let d = task.x.ncols();
    let mut x = Array2::zeros((idx.len(), d));
    let mut y = Array1::zeros(idx.len());
    for (out, &i) in idx.iter().enumerate() {
        x.row_mut(out).assign(&task.x.row(i));
        y[out] = task.y[i];
    }
    TaskData {
        label: task.label.clone(),
        x,
        y,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1, Array2};
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn single_task(n: usize) -> MultiTaskDataset {
        let x = Array2::from_shape_fn((n, 1), |(i, _)| i as f64);
        let y = Array1::from_iter((0..n).map(|i| i as f64));
        MultiTaskDataset::new(
            vec![TaskData {
                label: "t".into(),
                x,
                y,
            }],
            vec!["x".into()],
        )
        .unwrap()
    }

    #[test]
    fn two_folds_partition_four_rows() {
        let ds = single_task(4);
        let folds = split_folds(&ds, 2, 7).unwrap();
        assert_eq!(folds.len(), 2);
        let mut seen = BTreeSet::new();
        for (train, test) in &folds {
            assert_eq!(test.tasks[0].x.nrows(), 2);
            assert_eq!(train.tasks[0].x.nrows(), 2);
            for v in test.tasks[0].x.column(0) {
                assert!(seen.insert(*v as usize), "row tested twice");
            }
        }
        assert_eq!(seen.len(), 4);
    }

    #[test]
    fn same_seed_gives_identical_folds() {
        let ds = single_task(9);
        let a = split_folds(&ds, 3, 42).unwrap();
        let b = split_folds(&ds, 3, 42).unwrap();
        for ((ta, sa), (tb, sb)) in a.iter().zip(&b) {
            assert_eq!(ta, tb);
            assert_eq!(sa, sb);
        }
    }

    #[test]
    fn small_task_contributes_to_few_folds() {
        // 5 rows, 10 folds: exactly 5 folds receive one test row each.
        let ds = single_task(5);
        let folds = split_folds(&ds, 10, 0).unwrap();
        let nonempty = folds.iter().filter(|(_, test)| !test.tasks.is_empty()).count();
        assert_eq!(nonempty, 5);
        for (train, _) in &folds {
            assert!(train.tasks[0].x.nrows() >= 4);
        }
    }

    #[test]
    fn single_row_task_never_tested() {
        let ds = single_task(1);
        let folds = split_folds(&ds, 3, 0).unwrap();
        for (train, test) in &folds {
            assert_eq!(train.tasks[0].x.nrows(), 1);
            assert!(test.tasks.is_empty());
        }
    }

    #[test]
    fn k_below_two_rejected() {
        let ds = single_task(4);
        assert!(matches!(split_folds(&ds, 1, 0), Err(Error::Param(_))));
    }

    proptest! {
        #[test]
        fn folds_partition_each_task(sizes in prop::collection::vec(2usize..30, 1..5),
                                     k in 2usize..8,
                                     seed in 0u64..1000) {
            let tasks: Vec<TaskData> = sizes.iter().enumerate().map(|(t, &n)| TaskData {
                label: format!("t{t}"),
                x: Array2::from_shape_fn((n, 1), |(i, _)| (t * 1000 + i) as f64),
                y: Array1::zeros(n),
            }).collect();
            let ds = MultiTaskDataset::new(tasks, vec!["x".into()]).unwrap();
            let folds = split_folds(&ds, k, seed).unwrap();
            prop_assert_eq!(folds.len(), k);
            // per task: test chunks are disjoint and cover all rows
            for (t, &n) in sizes.iter().enumerate() {
                let label = format!("t{t}");
                let mut seen = BTreeSet::new();
                for (_, test) in &folds {
                    if let Some(task) = test.tasks.iter().find(|x| x.label == label) {
                        for v in task.x.column(0) {
                            prop_assert!(seen.insert(*v as usize));
                        }
                    }
                }
                prop_assert_eq!(seen.len(), n);
            }
            // every task keeps training rows in every fold
            for (train, _) in &folds {
                prop_assert_eq!(train.tasks.len(), sizes.len());
            }
        }
    }

    #[test]
    fn fold_example_matrix_content_is_consistent() {
        let ds = MultiTaskDataset::new(
            vec![TaskData {
                label: "t".into(),
                x: array![[1.0, 10.0], [2.0, 20.0], [3.0, 30.0], [4.0, 40.0]],
                y: array![1.0, 2.0, 3.0, 4.0],
            }],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let folds = split_folds(&ds, 2, 3).unwrap();
        for (train, test) in &folds {
            for task in train.tasks.iter().chain(&test.tasks) {
                for (row, &y) in task.x.rows().into_iter().zip(&task.y) {
                    assert_eq!(row[0], y);
                    assert_eq!(row[1], y * 10.0);
                }
            }
        }
    }
}
