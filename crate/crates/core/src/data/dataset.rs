//! Numeric multi-task dataset.

use crate::error::{Error, Result};
use ndarray::{Array1, Array2};

/// Design matrix and responses of one task (rows = samples of that task).
#[derive(Debug, Clone, PartialEq)]
pub struct TaskData {
    pub label: String,
    pub x: Array2<f64>,
    pub y: Array1<f64>,
}

/// Fully numeric dataset grouped by task. Every task shares the same feature
/// columns; every task holds at least one row; no value is missing.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiTaskDataset {
    pub tasks: Vec<TaskData>,
    pub feature_names: Vec<String>,
}

impl MultiTaskDataset {
    pub fn new(tasks: Vec<TaskData>, feature_names: Vec<String>) -> Result<MultiTaskDataset> {
        let d = feature_names.len();
        if tasks.is_empty() {
            return Err(Error::Data("dataset has no tasks".into()));
        }
        for t in &tasks {
            if t.x.ncols() != d {
                return Err(Error::Shape(format!(
                    "task `{}` has {} feature columns, expected {d}",
                    t.label,
                    t.x.ncols()
                )));
            }
            if t.x.nrows() == 0 {
                return Err(Error::Data(format!("task `{}` has no rows", t.label)));
            }
            if t.x.nrows() != t.y.len() {
                return Err(Error::Shape(format!(
                    "task `{}`: {} rows but {} responses",
                    t.label,
                    t.x.nrows(),
                    t.y.len()
                )));
            }
            if t.x.iter().any(|v| !v.is_finite()) || t.y.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data(format!(
                    "task `{}` contains non-finite values",
                    t.label
                )));
            }
        }
        Ok(MultiTaskDataset {
            tasks,
            feature_names,
        })
    }

    pub fn n_tasks(&self) -> usize {
        self.tasks.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_rows(&self) -> usize {
        self.tasks.iter().map(|t| t.x.nrows()).sum()
    }

    pub fn task_index(&self, label: &str) -> Option<usize> {
        self.tasks.iter().position(|t| t.label == label)
    }

    pub fn task_labels(&self) -> Vec<String> {
        self.tasks.iter().map(|t| t.label.clone()).collect()
    }

    /// Stacks all tasks (in task order) into one pooled design matrix and
    /// response vector, plus the task index of every pooled row.
    pub fn pooled(&self) -> (Array2<f64>, Array1<f64>, Vec<usize>) {
        let n = self.n_rows();
        let d = self.n_features();
        let mut x = Array2::zeros((n, d));
        let mut y = Array1::zeros(n);
        let mut owner = Vec::with_capacity(n);
        let mut at = 0;
        for (t, task) in self.tasks.iter().enumerate() {
            let nt = task.x.nrows();
            x.slice_mut(ndarray::s![at..at + nt, ..]).assign(&task.x);
            y.slice_mut(ndarray::s![at..at + nt]).assign(&task.y);
            owner.extend(std::iter::repeat_n(t, nt));
            at += nt;
        }
        (x, y, owner)
    }
}
