//! Tabular data representation and ingestion.
//!
//! A [`RecordTable`] is the raw, possibly incomplete table read from CSV;
//! [`preprocess`] turns it into a numeric [`MultiTaskDataset`] (one design
//! matrix and response vector per task) while learning a [`PreprocessSpec`]
//! that replays the identical transformation on later data.

mod dataset;
mod folds;
mod preprocess;

pub use dataset::{MultiTaskDataset, TaskData};
pub use folds::split_folds;
pub use preprocess::{
    apply_preprocess, preprocess, Applied, CategoricalColumnSpec, FeatureColumnSpec, ImputePolicy,
    NumericColumnSpec, PredictMatrix, Preprocessed, PreprocessOptions, PreprocessReport,
    PreprocessSpec,
};

use crate::error::{Error, Result};
use std::fmt;
use std::path::Path;

/// Role of a column in the input table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnTag {
    TaskId,
    Target,
    Numeric,
    Categorical,
}

impl ColumnTag {
    fn prefix(self) -> &'static str {
        match self {
            ColumnTag::TaskId => "task_id",
            ColumnTag::Target => "target",
            ColumnTag::Numeric => "num",
            ColumnTag::Categorical => "cat",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSpec {
    pub name: String,
    pub tag: ColumnTag,
}

/// Declared column layout: exactly one task-id column, exactly one target,
/// and any number of `num`/`cat` feature columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    pub columns: Vec<ColumnSpec>,
}

impl Schema {
    pub fn new(columns: Vec<ColumnSpec>) -> Result<Schema> {
        let schema = Schema { columns };
        schema.validate()?;
        Ok(schema)
    }

    /// Parses the `tag:name` list used by run configurations, e.g.
    /// `task_id:facility,num:age,cat:gender,target:rvu`.
    pub fn parse(text: &str) -> Result<Schema> {
        let mut columns = Vec::new();
        for part in text.split(',') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (tag, name) = part
                .split_once(':')
                .ok_or_else(|| Error::Schema(format!("column `{part}` is not `tag:name`")))?;
            let tag = match tag.trim() {
                "task_id" => ColumnTag::TaskId,
                "target" => ColumnTag::Target,
                "num" => ColumnTag::Numeric,
                "cat" => ColumnTag::Categorical,
                other => {
                    return Err(Error::Schema(format!(
                        "unknown column tag `{other}` (expected task_id, target, num or cat)"
                    )))
                }
            };
            columns.push(ColumnSpec {
                name: name.trim().to_string(),
                tag,
            });
        }
        Schema::new(columns)
    }

    fn validate(&self) -> Result<()> {
        let mut names: Vec<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Schema(format!("duplicate column name `{}`", w[0])));
        }
        let task_ids = self.count(ColumnTag::TaskId);
        let targets = self.count(ColumnTag::Target);
        if task_ids != 1 {
            return Err(Error::Schema(format!(
                "expected exactly one task_id column, found {task_ids}"
            )));
        }
        if targets != 1 {
            return Err(Error::Schema(format!(
                "expected exactly one target column, found {targets}"
            )));
        }
        Ok(())
    }

    fn count(&self, tag: ColumnTag) -> usize {
        self.columns.iter().filter(|c| c.tag == tag).count()
    }

    pub fn task_id_index(&self) -> usize {
        self.columns
            .iter()
            .position(|c| c.tag == ColumnTag::TaskId)
            .expect("validated schema has a task_id column")
    }

    pub fn target_index(&self) -> usize {
        self.columns
            .iter()
            .position(|c| c.tag == ColumnTag::Target)
            .expect("validated schema has a target column")
    }

    /// Feature columns (numeric and categorical) in declaration order.
    pub fn feature_columns(&self) -> impl Iterator<Item = (usize, &ColumnSpec)> {
        self.columns
            .iter()
            .enumerate()
            .filter(|(_, c)| matches!(c.tag, ColumnTag::Numeric | ColumnTag::Categorical))
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .columns
            .iter()
            .map(|c| format!("{}:{}", c.tag.prefix(), c.name))
            .collect();
        write!(f, "{}", parts.join(","))
    }
}

/// One parsed cell. Unparseable numeric text and empty fields become
/// [`Cell::Missing`]; preprocessing decides what to do with them.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Number(f64),
    Text(String),
    Missing,
}

/// Raw table: a validated schema plus rows of parsed cells.
#[derive(Debug, Clone)]
pub struct RecordTable {
    pub schema: Schema,
    pub rows: Vec<Vec<Cell>>,
}

impl RecordTable {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// Counts cells recorded as missing.
    pub fn n_missing(&self) -> usize {
        self.rows
            .iter()
            .flat_map(|r| r.iter())
            .filter(|c| matches!(c, Cell::Missing))
            .count()
    }
}

fn parse_cell(field: &str, tag: ColumnTag) -> Cell {
    let field = field.trim();
    if field.is_empty() {
        return Cell::Missing;
    }
    match tag {
        ColumnTag::Numeric | ColumnTag::Target => match field.parse::<f64>() {
            Ok(v) if v.is_finite() => Cell::Number(v),
            _ => Cell::Missing,
        },
        ColumnTag::TaskId | ColumnTag::Categorical => Cell::Text(field.to_string()),
    }
}

/// Reads a comma-delimited UTF-8 file with a header row into a [`RecordTable`].
///
/// The header must contain every schema column exactly once (order is free;
/// `target_required = false` lets prediction inputs omit the target column).
/// Extra columns in the file are an error: tags must be declared for every
/// column that is present.
pub fn load_csv_with(path: &Path, schema: &Schema, target_required: bool) -> Result<RecordTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::Data(format!("cannot open {}: {e}", path.display())),
            _ => Error::Csv(e),
        })?;
    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    {
        let mut sorted = headers.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Schema(format!(
                "duplicate column `{}` in CSV header",
                w[0]
            )));
        }
    }
    let target_name = &schema.columns[schema.target_index()].name;
    let mut positions = Vec::with_capacity(schema.columns.len());
    for col in &schema.columns {
        match headers.iter().position(|h| h == &col.name) {
            Some(p) => positions.push(Some(p)),
            None if col.tag == ColumnTag::Target && !target_required => positions.push(None),
            None => {
                return Err(Error::Schema(format!(
                    "declared column `{}` is missing from the CSV header",
                    col.name
                )))
            }
        }
    }
    let known: Vec<&String> = schema.columns.iter().map(|c| &c.name).collect();
    if let Some(extra) = headers.iter().find(|h| !known.contains(h)) {
        return Err(Error::Schema(format!(
            "CSV column `{extra}` has no declared tag"
        )));
    }
    let _ = target_name;

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let mut row = Vec::with_capacity(schema.columns.len());
        for (col, pos) in schema.columns.iter().zip(&positions) {
            match pos {
                Some(p) => row.push(parse_cell(record.get(*p).unwrap_or(""), col.tag)),
                None => row.push(Cell::Missing),
            }
        }
        rows.push(row);
    }
    Ok(RecordTable {
        schema: schema.clone(),
        rows,
    })
}

/// [`load_csv_with`] requiring the target column to be present.
pub fn load_csv(path: &Path, schema: &Schema) -> Result<RecordTable> {
    load_csv_with(path, schema, true)
}
