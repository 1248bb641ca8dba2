//! CSV ingestion and emission.
//!
//! Dataset files have the header `site_id,x,y,t_0,…,t_{T-1}` and one row per
//! site. An optional `covariates.csv` next to the dataset file, with header
//! `site_id,<name>,…`, is attached by site id. Numbers are written in
//! shortest round-trip scientific notation so that loading a saved file
//! reproduces it exactly.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::dataset::{Covariates, SpatialDataset};
use crate::error::{Error, Result};
use crate::fdcore::{Grid, SampledFunction, Site};

pub const COVARIATES_FILE: &str = "covariates.csv";

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_number(path: &Path, line: u64, cell: &str) -> Result<f64> {
    let v: f64 = cell
        .trim()
        .parse()
        .map_err(|_| parse_error(path, line, format!("'{cell}' is not a number")))?;
    if !v.is_finite() {
        return Err(parse_error(path, line, format!("'{cell}' is not finite")));
    }
    Ok(v)
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file))
}

/// Data rows with their line numbers.
type Rows = Vec<(u64, Vec<String>)>;

fn records(path: &Path) -> Result<(Vec<String>, Rows)> {
    let mut rdr = reader(path)?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| parse_error(path, 1, e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            parse_error(
                path,
                e.position().map(|p| p.line()).unwrap_or(0),
                e.to_string(),
            )
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        rows.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok((header, rows))
}

/// Loads a dataset, resampling onto `grid` when given, and attaches a
/// companion covariate file when one exists.
pub fn load_dataset(path: &Path, grid: Option<Grid>) -> Result<SpatialDataset> {
    let (header, rows) = records(path)?;
    if header.len() < 5 || header[0] != "site_id" || header[1] != "x" || header[2] != "y" {
        return Err(parse_error(
            path,
            1,
            "header must start with site_id,x,y and list at least two samples",
        ));
    }
    for (k, h) in header[3..].iter().enumerate() {
        if *h != format!("t_{k}") {
            return Err(parse_error(
                path,
                1,
                format!("expected column t_{k}, found '{h}'"),
            ));
        }
    }
    let t = header.len() - 3;
    let file_grid = Grid::new(t)?;
    let mut ids = Vec::with_capacity(rows.len());
    let mut functions = Vec::with_capacity(rows.len());
    for (line, row) in rows {
        if row.len() != header.len() {
            return Err(parse_error(
                path,
                line,
                format!("expected {} fields, found {}", header.len(), row.len()),
            ));
        }
        let x = parse_number(path, line, &row[1])?;
        let y = parse_number(path, line, &row[2])?;
        let values = row[3..]
            .iter()
            .map(|c| parse_number(path, line, c))
            .collect::<Result<Vec<_>>>()?;
        let f = SampledFunction::new(file_grid, values, Site::new(x, y))?;
        ids.push(row[0].trim().to_string());
        functions.push(match grid {
            Some(g) if g != file_grid => f.resample(g),
            _ => f,
        });
    }
    let mut data = SpatialDataset::new(ids, functions)?;
    data.meta.push(format!("loaded from {}", path.display()));
    if let Some(cov_path) = companion_covariates(path) {
        let cov = load_covariates(&cov_path, data.ids())?;
        data = data.with_covariates(cov)?;
    }
    Ok(data)
}

fn companion_covariates(path: &Path) -> Option<PathBuf> {
    if path.file_name().is_some_and(|n| n == COVARIATES_FILE) {
        return None;
    }
    let candidate = path
        .parent()
        .unwrap_or(Path::new("."))
        .join(COVARIATES_FILE);
    candidate.is_file().then_some(candidate)
}

/// Reads a covariate table and orders its rows as `ids`.
pub fn load_covariates(path: &Path, ids: &[String]) -> Result<Covariates> {
    let (header, rows) = records(path)?;
    if header.is_empty() || header[0] != "site_id" {
        return Err(parse_error(
            path,
            1,
            "covariate header must start with site_id",
        ));
    }
    let names: Vec<String> = header[1..].to_vec();
    let mut by_id: HashMap<String, Vec<f64>> = HashMap::new();
    for (line, row) in rows {
        if row.len() != header.len() {
            return Err(parse_error(
                path,
                line,
                format!("expected {} fields, found {}", header.len(), row.len()),
            ));
        }
        let vals = row[1..]
            .iter()
            .map(|c| parse_number(path, line, c))
            .collect::<Result<Vec<_>>>()?;
        if by_id.insert(row[0].trim().to_string(), vals).is_some() {
            return Err(Error::Validation(format!(
                "duplicate covariate row for site {}",
                row[0]
            )));
        }
    }
    let rows = ids
        .iter()
        .map(|id| {
            by_id.remove(id).ok_or_else(|| {
                Error::Validation(format!("{} has no row for site {id}", path.display()))
            })
        })
        .collect::<Result<_>>()?;
    Ok(Covariates { names, rows })
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    Ok(())
}

/// Writes a CSV file from a header and pre-formatted rows.
pub fn write_table(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    create_parent(path)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
    let write_err = |e: csv::Error| Error::Validation(format!("{}: {e}", path.display()));
    w.write_record(header).map_err(write_err)?;
    for r in rows {
        w.write_record(r).map_err(write_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn fmt_num(v: f64) -> String {
    format!("{v:e}")
}

/// Saves a dataset and, when it has covariates, `covariates.csv` in the same
/// directory.
pub fn save_dataset(data: &SpatialDataset, path: &Path) -> Result<()> {
    let t = data.grid().len();
    let mut header = vec!["site_id".to_string(), "x".into(), "y".into()];
    header.extend((0..t).map(|k| format!("t_{k}")));
    let rows: Vec<Vec<String>> = data
        .ids()
        .iter()
        .zip(data.functions())
        .map(|(id, f)| {
            let mut r = vec![id.clone(), fmt_num(f.site().x), fmt_num(f.site().y)];
            r.extend(f.values().iter().map(|&v| fmt_num(v)));
            r
        })
        .collect();
    write_table(path, &header, &rows)?;
    if let Some(cov) = data.covariates() {
        let mut header = vec!["site_id".to_string()];
        header.extend(cov.names.iter().cloned());
        let rows: Vec<Vec<String>> = data
            .ids()
            .iter()
            .zip(&cov.rows)
            .map(|(id, r)| {
                std::iter::once(id.clone())
                    .chain(r.iter().map(|&v| fmt_num(v)))
                    .collect()
            })
            .collect();
        write_table(
            &path
                .parent()
                .unwrap_or(Path::new("."))
                .join(COVARIATES_FILE),
            &header,
            &rows,
        )?;
    }
    Ok(())
}

/// Reads target sites from a CSV with header `site_id,x,y`.
pub fn load_targets(path: &Path) -> Result<Vec<(String, Site)>> {
    let (header, rows) = records(path)?;
    if header.len() < 3 || header[0] != "site_id" || header[1] != "x" || header[2] != "y" {
        return Err(parse_error(path, 1, "target header must be site_id,x,y"));
    }
    rows.into_iter()
        .map(|(line, row)| {
            if row.len() < 3 {
                return Err(parse_error(path, line, "expected site_id,x,y"));
            }
            Ok((
                row[0].trim().to_string(),
                Site::new(
                    parse_number(path, line, &row[1])?,
                    parse_number(path, line, &row[2])?,
                ),
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formatting_round_trips() {
        for v in [0.1, -3.25e-7, 1.0 / 3.0, 12345.678] {
            assert_eq!(fmt_num(v).parse::<f64>().unwrap(), v);
        }
    }
}
