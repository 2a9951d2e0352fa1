//! Round streams read from a headered CSV file.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::loss::{LossInstance, LossKind};
use super::Round;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub task_col: String,
    /// Required for square and logistic losses.
    pub label_col: Option<String>,
    pub feature_cols: Vec<String>,
    pub loss: LossKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvDataset {
    pub rounds: Vec<Round>,
    pub n_tasks: usize,
    /// Original task identifiers, indexed by the dense task id.
    pub task_names: Vec<String>,
}

/// Loads rounds in file order; task ids are renumbered `0..N` by first appearance.
pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<CsvDataset> {
    let data_err = |line: usize, message: String| Error::Data {
        path: path.to_path_buf(),
        line,
        message,
    };
    if schema.feature_cols.is_empty() {
        return Err(Error::config("feature_cols must name at least one column"));
    }
    if schema.loss.uses_label() && schema.label_col.is_none() {
        return Err(Error::config(format!(
            "{:?} loss needs label_col",
            schema.loss
        )));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| data_err(1, format!("unknown column `{name}`")))
    };
    let task_idx = column(&schema.task_col)?;
    let label_idx = match (&schema.label_col, schema.loss.uses_label()) {
        (Some(name), true) => Some(column(name)?),
        _ => None,
    };
    let feature_idx: Vec<usize> = schema
        .feature_cols
        .iter()
        .map(|c| column(c))
        .collect::<Result<_>>()?;

    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut task_names = Vec::new();
    let mut rounds = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let cell = |idx: usize, what: &str| {
            record
                .get(idx)
                .filter(|s| !s.is_empty())
                .ok_or_else(|| data_err(line, format!("missing {what}")))
        };
        let number = |idx: usize, what: &str| -> Result<f64> {
            let raw = cell(idx, what)?;
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| data_err(line, format!("{what} `{raw}` is not a finite number")))
        };
        let task_raw = cell(task_idx, "task id")?.to_string();
        let next = ids.len();
        let task = *ids.entry(task_raw.clone()).or_insert_with(|| {
            task_names.push(task_raw);
            next
        });
        let features = feature_idx
            .iter()
            .zip(&schema.feature_cols)
            .map(|(&i, name)| number(i, &format!("feature `{name}`")))
            .collect::<Result<Vec<f64>>>()?;
        let label = match label_idx {
            Some(i) => number(i, "label")?,
            None => 0.0,
        };
        let loss = LossInstance::new(schema.loss, features, label)
            .map_err(|e| data_err(line, e.to_string()))?;
        rounds.push(Round::new(rounds.len(), task, loss));
    }
    if rounds.is_empty() {
        return Err(data_err(1, "no rounds".into()));
    }
    Ok(CsvDataset {
        rounds,
        n_tasks: task_names.len(),
        task_names,
    })
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Data {
            path: PathBuf::from(path),
            line,
            message: format!("{other:?}"),
        },
    }
}
