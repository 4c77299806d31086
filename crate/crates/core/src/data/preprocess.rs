//! Preprocessing: row cleaning, imputation, dummy expansion, min-max scaling.
//!
//! [`preprocess`] learns every data-dependent quantity (target outlier bounds,
//! per-task imputation means, category levels, min-max ranges) from the rows
//! it is given and returns them as a [`PreprocessSpec`]. [`apply_preprocess`]
//! replays the stored transformation on new rows, so train and test data go
//! through byte-identical arithmetic. Applying a spec to the rows it was
//! learned from reproduces the training dataset bit for bit.

use super::dataset::{MultiTaskDataset, TaskData};
use super::{Cell, ColumnTag, RecordTable};
use crate::error::{Error, Result};
use ndarray::{Array1, Array2};
use std::collections::{BTreeMap, BTreeSet};

/// What to do with rows whose numeric feature cells are missing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImputePolicy {
    /// Drop the row.
    DropRow,
    /// Replace the cell with the mean of the observed values of the same
    /// column among rows of the same task; tasks with no observed value
    /// fall back to the column's global mean.
    TaskMean,
}

/// Knobs for [`preprocess`].
#[derive(Debug, Clone)]
pub struct PreprocessOptions {
    pub imputation: ImputePolicy,
    /// Rows whose target lies more than this many interquartile ranges
    /// beyond the quartiles are dropped. `None` disables the rule.
    pub outlier_iqr: Option<f64>,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        PreprocessOptions {
            imputation: ImputePolicy::TaskMean,
            outlier_iqr: Some(3.0),
        }
    }
}

/// Learned state of one numeric column.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericColumnSpec {
    pub name: String,
    /// Scaling range learned on the training rows (min <= max).
    pub min: f64,
    pub max: f64,
    pub global_mean: f64,
    /// Mean of observed values per task label, sorted by label.
    pub task_means: Vec<(String, f64)>,
}

impl NumericColumnSpec {
    fn impute_value(&self, task: Option<&str>) -> f64 {
        task.and_then(|t| {
            self.task_means
                .binary_search_by(|(label, _)| label.as_str().cmp(t))
                .ok()
                .map(|i| self.task_means[i].1)
        })
        .unwrap_or(self.global_mean)
    }

    /// `(x - min) / (max - min)`; constant columns map to 0. Values outside
    /// the learned range intentionally land outside [0, 1] (no clamping).
    fn scale(&self, v: f64) -> f64 {
        if self.max > self.min {
            (v - self.min) / (self.max - self.min)
        } else {
            0.0
        }
    }
}

/// Learned state of one categorical column: the observed levels, sorted.
/// Each level becomes one indicator column; unseen or missing levels encode
/// as all zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalColumnSpec {
    pub name: String,
    pub levels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureColumnSpec {
    Numeric(NumericColumnSpec),
    Categorical(CategoricalColumnSpec),
}

/// Everything needed to replay the preprocessing transformation.
#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessSpec {
    pub imputation: ImputePolicy,
    /// Inclusive target bounds; rows outside are dropped. Infinite when the
    /// outlier rule is off.
    pub target_bounds: (f64, f64),
    /// Feature columns in declaration order.
    pub columns: Vec<FeatureColumnSpec>,
}

impl PreprocessSpec {
    /// Names of the emitted feature columns, categorical columns expanded in
    /// place as `column=level`.
    pub fn feature_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for col in &self.columns {
            match col {
                FeatureColumnSpec::Numeric(nc) => names.push(nc.name.clone()),
                FeatureColumnSpec::Categorical(cc) => {
                    names.extend(cc.levels.iter().map(|l| format!("{}={}", cc.name, l)))
                }
            }
        }
        names
    }

    pub fn n_features(&self) -> usize {
        self.columns
            .iter()
            .map(|c| match c {
                FeatureColumnSpec::Numeric(_) => 1,
                FeatureColumnSpec::Categorical(cc) => cc.levels.len(),
            })
            .sum()
    }
}

/// Row accounting from [`preprocess`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PreprocessReport {
    pub rows_in: usize,
    pub dropped_missing_key: usize,
    pub dropped_outlier: usize,
    pub dropped_missing_numeric: usize,
    /// Tasks present in the raw rows that lost every row.
    pub removed_tasks: Vec<String>,
    pub warnings: Vec<String>,
}

pub struct Preprocessed {
    pub dataset: MultiTaskDataset,
    pub spec: PreprocessSpec,
    pub report: PreprocessReport,
}

pub struct Applied {
    pub dataset: MultiTaskDataset,
    pub warnings: Vec<String>,
}

/// Row-ordered feature matrix for prediction inputs (no rows are dropped).
pub struct PredictMatrix {
    pub features: Array2<f64>,
    /// Task label per row; `None` when the task-id cell was missing.
    pub tasks: Vec<Option<String>>,
    pub warnings: Vec<String>,
}

/// Learns a [`PreprocessSpec`] from `raw` and builds the training dataset.
pub fn preprocess(raw: &RecordTable, options: &PreprocessOptions) -> Result<Preprocessed> {
    if raw.rows.is_empty() {
        return Err(Error::Data("no rows to learn preprocessing from".into()));
    }
    let spec = learn_spec(raw, options)?;
    let (dataset, mut report) = transform_grouped(raw, &spec)?;
    report.rows_in = raw.n_rows();
    Ok(Preprocessed {
        dataset,
        spec,
        report,
    })
}

/// Replays a learned transformation on new rows.
pub fn apply_preprocess(raw: &RecordTable, spec: &PreprocessSpec) -> Result<Applied> {
    let (dataset, report) = transform_grouped(raw, spec)?;
    Ok(Applied {
        dataset,
        warnings: report.warnings,
    })
}

/// Encodes rows for prediction, preserving row order. Missing numeric cells
/// are always imputed here (even under the drop-row policy) because every
/// input row must produce a prediction; the target column is ignored.
pub fn transform_for_predict(raw: &RecordTable, spec: &PreprocessSpec) -> Result<PredictMatrix> {
    check_columns(raw, spec)?;
    let task_col = raw.schema.task_id_index();
    let d = spec.n_features();
    let mut warnings = BTreeSet::new();
    let mut values = Vec::with_capacity(raw.n_rows() * d);
    let mut tasks = Vec::with_capacity(raw.n_rows());
    for row in &raw.rows {
        let task = match &row[task_col] {
            Cell::Text(t) => Some(t.clone()),
            _ => None,
        };
        let mut out = Vec::with_capacity(d);
        encode_features(
            row,
            raw,
            spec,
            task.as_deref(),
            true,
            &mut out,
            &mut warnings,
        );
        values.extend(out);
        tasks.push(task);
    }
    let features = Array2::from_shape_vec((raw.n_rows(), d), values)
        .map_err(|e| Error::Shape(e.to_string()))?;
    Ok(PredictMatrix {
        features,
        tasks,
        warnings: warnings.into_iter().collect(),
    })
}

fn check_columns(raw: &RecordTable, spec: &PreprocessSpec) -> Result<()> {
    let declared: Vec<(&str, bool)> = raw
        .schema
        .feature_columns()
        .map(|(_, c)| (c.name.as_str(), c.tag == ColumnTag::Numeric))
        .collect();
    let expected: Vec<(&str, bool)> = spec
        .columns
        .iter()
        .map(|c| match c {
            FeatureColumnSpec::Numeric(nc) => (nc.name.as_str(), true),
            FeatureColumnSpec::Categorical(cc) => (cc.name.as_str(), false),
        })
        .collect();
    if declared != expected {
        return Err(Error::Schema(
            "feature columns do not match the learned preprocessing state".into(),
        ));
    }
    Ok(())
}

fn learn_spec(raw: &RecordTable, options: &PreprocessOptions) -> Result<PreprocessSpec> {
    let task_col = raw.schema.task_id_index();
    let target_col = raw.schema.target_index();

    // Rows with a task label and a parsed target are candidates.
    let candidates: Vec<(&Vec<Cell>, &str, f64)> = raw
        .rows
        .iter()
        .filter_map(|row| match (&row[task_col], &row[target_col]) {
            (Cell::Text(t), Cell::Number(y)) => Some((row, t.as_str(), *y)),
            _ => None,
        })
        .collect();
    if candidates.is_empty() {
        return Err(Error::Data(
            "every row is missing its task id or target".into(),
        ));
    }

    let target_bounds = match options.outlier_iqr {
        Some(k) => {
            let mut targets: Vec<f64> = candidates.iter().map(|(_, _, y)| *y).collect();
            targets.sort_by(f64::total_cmp);
            let q1 = quantile(&targets, 0.25);
            let q3 = quantile(&targets, 0.75);
            let iqr = q3 - q1;
            (q1 - k * iqr, q3 + k * iqr)
        }
        None => (f64::NEG_INFINITY, f64::INFINITY),
    };
    let retained: Vec<(&Vec<Cell>, &str)> = candidates
        .iter()
        .filter(|(_, _, y)| *y >= target_bounds.0 && *y <= target_bounds.1)
        .map(|(row, t, _)| (*row, *t))
        .collect();
    if retained.is_empty() {
        return Err(Error::Data("every row was dropped as a target outlier".into()));
    }

    // First pass: observed means and category levels.
    let mut columns = Vec::new();
    for (idx, col) in raw.schema.feature_columns() {
        match col.tag {
            ColumnTag::Numeric => {
                let mut by_task: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
                let mut total = (0.0, 0usize);
                for (row, task) in &retained {
                    if let Cell::Number(v) = &row[idx] {
                        let e = by_task.entry(task).or_insert((0.0, 0));
                        e.0 += v;
                        e.1 += 1;
                        total.0 += v;
                        total.1 += 1;
                    }
                }
                let global_mean = if total.1 > 0 { total.0 / total.1 as f64 } else { 0.0 };
                let task_means = by_task
                    .into_iter()
                    .map(|(t, (s, n))| (t.to_string(), s / n as f64))
                    .collect();
                columns.push(FeatureColumnSpec::Numeric(NumericColumnSpec {
                    name: col.name.clone(),
                    min: 0.0,
                    max: 0.0,
                    global_mean,
                    task_means,
                }));
            }
            ColumnTag::Categorical => {
                let mut levels: BTreeSet<&str> = BTreeSet::new();
                for (row, _) in &retained {
                    if let Cell::Text(v) = &row[idx] {
                        levels.insert(v.as_str());
                    }
                }
                columns.push(FeatureColumnSpec::Categorical(CategoricalColumnSpec {
                    name: col.name.clone(),
                    levels: levels.into_iter().map(String::from).collect(),
                }));
            }
            _ => unreachable!("feature_columns yields only num/cat"),
        }
    }

    // Second pass: min-max ranges over the values that actually survive the
    // imputation policy (post-imputation, pre-scaling).
    let feature_indices: Vec<usize> = raw.schema.feature_columns().map(|(i, _)| i).collect();
    let mut ranges: Vec<Option<(f64, f64)>> = vec![None; columns.len()];
    for (row, task) in &retained {
        let mut values = Vec::with_capacity(columns.len());
        let mut drop = false;
        for (spec_col, &idx) in columns.iter().zip(&feature_indices) {
            if let FeatureColumnSpec::Numeric(nc) = spec_col {
                match &row[idx] {
                    Cell::Number(v) => values.push(Some(*v)),
                    _ => match options.imputation {
                        ImputePolicy::DropRow => {
                            drop = true;
                            break;
                        }
                        ImputePolicy::TaskMean => values.push(Some(nc.impute_value(Some(task)))),
                    },
                }
            } else {
                values.push(None);
            }
        }
        if drop {
            continue;
        }
        for (slot, v) in ranges.iter_mut().zip(values) {
            if let Some(v) = v {
                let (lo, hi) = slot.get_or_insert((v, v));
                *lo = lo.min(v);
                *hi = hi.max(v);
            }
        }
    }
    for (col, range) in columns.iter_mut().zip(ranges) {
        if let FeatureColumnSpec::Numeric(nc) = col {
            let (min, max) = range.unwrap_or((0.0, 0.0));
            nc.min = min;
            nc.max = max;
        }
    }

    Ok(PreprocessSpec {
        imputation: options.imputation,
        target_bounds,
        columns,
    })
}

/// Shared transformation path for [`preprocess`] and [`apply_preprocess`].
fn transform_grouped(
    raw: &RecordTable,
    spec: &PreprocessSpec,
) -> Result<(MultiTaskDataset, PreprocessReport)> {
    check_columns(raw, spec)?;
    let task_col = raw.schema.task_id_index();
    let target_col = raw.schema.target_index();
    let d = spec.n_features();

    let mut report = PreprocessReport::default();
    let mut warnings = BTreeSet::new();
    let mut seen_tasks: BTreeSet<&str> = BTreeSet::new();
    let mut groups: BTreeMap<&str, (Vec<f64>, Vec<f64>)> = BTreeMap::new();

    for row in &raw.rows {
        let (task, target) = match (&row[task_col], &row[target_col]) {
            (Cell::Text(t), Cell::Number(y)) => {
                seen_tasks.insert(t.as_str());
                (t.as_str(), *y)
            }
            (Cell::Text(t), _) => {
                seen_tasks.insert(t.as_str());
                report.dropped_missing_key += 1;
                continue;
            }
            _ => {
                report.dropped_missing_key += 1;
                continue;
            }
        };
        if target < spec.target_bounds.0 || target > spec.target_bounds.1 {
            report.dropped_outlier += 1;
            continue;
        }
        let mut out = Vec::with_capacity(d);
        let kept = encode_features(row, raw, spec, Some(task), false, &mut out, &mut warnings);
        if !kept {
            report.dropped_missing_numeric += 1;
            continue;
        }
        let entry = groups.entry(task).or_default();
        entry.0.extend(out);
        entry.1.push(target);
    }

    if groups.is_empty() {
        return Err(Error::Data(
            "all rows were dropped during preprocessing".into(),
        ));
    }
    report.removed_tasks = seen_tasks
        .iter()
        .filter(|t| !groups.contains_key(*t))
        .map(|t| t.to_string())
        .collect();
    report.warnings = warnings.into_iter().collect();

    let mut tasks = Vec::with_capacity(groups.len());
    for (label, (xs, ys)) in groups {
        let n = ys.len();
        tasks.push(TaskData {
            label: label.to_string(),
            x: Array2::from_shape_vec((n, d), xs).map_err(|e| Error::Shape(e.to_string()))?,
            y: Array1::from_vec(ys),
        });
    }
    let dataset = MultiTaskDataset::new(tasks, spec.feature_names())?;
    Ok((dataset, report))
}

/// Encodes the feature cells of one row. Returns `false` when the row must be
/// dropped (missing numeric under the drop-row policy and `force_impute` off).
fn encode_features(
    row: &[Cell],
    raw: &RecordTable,
    spec: &PreprocessSpec,
    task: Option<&str>,
    force_impute: bool,
    out: &mut Vec<f64>,
    warnings: &mut BTreeSet<String>,
) -> bool {
    let feature_indices = raw.schema.feature_columns().map(|(i, _)| i);
    for (col, idx) in spec.columns.iter().zip(feature_indices) {
        match col {
            FeatureColumnSpec::Numeric(nc) => {
                let value = match &row[idx] {
                    Cell::Number(v) => *v,
                    _ => {
                        if spec.imputation == ImputePolicy::DropRow && !force_impute {
                            return false;
                        }
                        nc.impute_value(task)
                    }
                };
                out.push(nc.scale(value));
            }
            FeatureColumnSpec::Categorical(cc) => {
                let base = out.len();
                out.resize(base + cc.levels.len(), 0.0);
                if let Cell::Text(v) = &row[idx] {
                    match cc.levels.binary_search(v) {
                        Ok(i) => out[base + i] = 1.0,
                        Err(_) => {
                            warnings.insert(format!(
                                "unseen level `{v}` in column `{}` encoded as all-zero indicators",
                                cc.name
                            ));
                        }
                    }
                }
            }
        }
    }
    true
}

/// Linear-interpolation quantile on a sorted slice.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 < n {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[n - 1]
    }
}
