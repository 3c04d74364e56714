//! CSV ingestion and atomic file output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};
use plfam_core::FunctionalDataset;

use crate::error::{CliError, Result};

/// Numeric table whose first column holds row ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub ids: Vec<String>,
    pub columns: Vec<String>,
    pub values: Array2<f64>,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Columns `names` in the given order.
    pub fn select(&self, names: &[String], path: &Path) -> Result<Array2<f64>> {
        let idx = names
            .iter()
            .map(|n| {
                self.column_index(n).ok_or_else(|| {
                    CliError::Data(format!("{}: missing column `{n}`", path.display()))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.values.select(ndarray::Axis(1), &idx))
    }
}

/// Reads `id,<col>,...`; every data cell must parse as a finite number.
pub fn read_table(path: &Path) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let header = reader
        .headers()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
        .clone();
    if header.len() < 2 {
        return Err(CliError::Data(format!(
            "{}: expected an id column followed by at least one data column",
            path.display()
        )));
    }
    let columns: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    let mut ids = Vec::new();
    let mut flat = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(CliError::Data(format!(
                "{}:{line}: expected {} fields, found {}",
                path.display(),
                header.len(),
                record.len()
            )));
        }
        ids.push(record[0].to_owned());
        for (field, name) in record.iter().skip(1).zip(&columns) {
            let v: f64 = field.parse().map_err(|_| {
                CliError::Data(format!(
                    "{}:{line}: column `{name}`: `{field}` is not a number",
                    path.display()
                ))
            })?;
            if !v.is_finite() {
                return Err(CliError::Data(format!(
                    "{}:{line}: column `{name}`: non-finite value",
                    path.display()
                )));
            }
            flat.push(v);
        }
    }
    if ids.is_empty() {
        return Err(CliError::Data(format!("{}: no data rows", path.display())));
    }
    let values =
        Array2::from_shape_vec((ids.len(), columns.len()), flat).expect("row lengths checked");
    Ok(Table {
        ids,
        columns,
        values,
    })
}

/// Functional CSV `id,t_1,...,t_N`: header cells are the grid points.
pub fn read_curves(path: &Path) -> Result<(Vec<String>, FunctionalDataset<f64>)> {
    let table = read_table(path)?;
    let grid = table
        .columns
        .iter()
        .map(|c| {
            c.parse::<f64>().map_err(|_| {
                CliError::Data(format!(
                    "{}:1: grid point `{c}` is not a number",
                    path.display()
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let data = FunctionalDataset::new(Array1::from(grid), table.values)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok((table.ids, data))
}

/// Response CSV `id,<name>` with exactly one data column.
pub fn read_response(path: &Path) -> Result<(Vec<String>, Array1<f64>)> {
    let table = read_table(path)?;
    if table.columns.len() != 1 {
        return Err(CliError::Data(format!(
            "{}: expected one response column, found {}",
            path.display(),
            table.columns.len()
        )));
    }
    Ok((table.ids, table.values.column(0).to_owned()))
}

/// Errors unless every id list equals the first, naming the offending file.
pub fn check_ids(lists: &[(&Path, &[String])]) -> Result<()> {
    let (first_path, first) = lists[0];
    for &(path, ids) in &lists[1..] {
        if ids.len() != first.len() {
            return Err(CliError::Data(format!(
                "{} has {} rows but {} has {}",
                path.display(),
                ids.len(),
                first_path.display(),
                first.len()
            )));
        }
        if let Some(i) = ids.iter().zip(first).position(|(a, b)| a != b) {
            return Err(CliError::Data(format!(
                "{}: row {} has id `{}` but {} has `{}`",
                path.display(),
                i + 1,
                ids[i],
                first_path.display(),
                first[i]
            )));
        }
    }
    Ok(())
}

fn temp_sibling(path: &Path) -> PathBuf {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!(".{name}.tmp-{}", std::process::id()))
}

/// Writes via a temporary sibling and rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = temp_sibling(path);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(CliError::io(path, e));
    }
    Ok(())
}

/// Builds a directory next to `path`, then swaps it into place.
pub fn write_dir_atomic(path: &Path, fill: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
    let tmp = temp_sibling(path);
    if tmp.exists() {
        fs::remove_dir_all(&tmp).map_err(|e| CliError::io(&tmp, e))?;
    }
    fs::create_dir_all(&tmp).map_err(|e| CliError::io(&tmp, e))?;
    if let Err(e) = fill(&tmp) {
        let _ = fs::remove_dir_all(&tmp);
        return Err(e);
    }
    if path.exists() {
        fs::remove_dir_all(path).map_err(|e| CliError::io(path, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}
