//! CSV ingestion and emission. Data files carry a header row; a final
//! column named `label` holds integer class ids. Constraint files use
//! the header `p,q,s` with zero-based sample indices.

use std::fs::File;
use std::path::Path;

use anyhow::{bail, Context, Result};
use fdc_core::types::{ConstraintSet, Dataset, MembershipMatrix};
use fdc_core::linalg::Matrix;

/// Loads a data CSV; returns the feature matrix and, when the header's
/// last column is `label`, the integer labels.
pub fn read_dataset(path: &Path) -> Result<(Dataset, Option<Vec<usize>>)> {
    let file = File::open(path).with_context(|| format!("cannot open data file {}", path.display()))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = reader.headers()?.clone();
    if headers.is_empty() {
        bail!("{}: empty header row", path.display());
    }
    let has_label = headers.iter().next_back() == Some("label");
    let n_features = if has_label { headers.len() - 1 } else { headers.len() };
    if n_features == 0 {
        bail!("{}: no feature columns", path.display());
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("{}: row {}", path.display(), line + 2))?;
        if record.len() != headers.len() {
            bail!(
                "{}: row {} has {} fields, header has {}",
                path.display(),
                line + 2,
                record.len(),
                headers.len()
            );
        }
        let mut row = Vec::with_capacity(n_features);
        for v in record.iter().take(n_features) {
            let x: f64 = v
                .trim()
                .parse()
                .with_context(|| format!("{}: row {}: bad number {v:?}", path.display(), line + 2))?;
            row.push(x);
        }
        if has_label {
            let raw = record.get(headers.len() - 1).unwrap().trim();
            let label: usize = raw
                .parse()
                .with_context(|| format!("{}: row {}: bad label {raw:?}", path.display(), line + 2))?;
            labels.push(label);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("{}: no data rows", path.display());
    }
    let data = Dataset::from_rows(&rows).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    Ok((data, has_label.then_some(labels)))
}

/// Loads a `p,q,s` constraint CSV.
pub fn read_constraints(path: &Path) -> Result<ConstraintSet> {
    let file =
        File::open(path).with_context(|| format!("cannot open constraint file {}", path.display()))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = reader.headers()?.clone();
    let expected = ["p", "q", "s"];
    if headers.iter().collect::<Vec<_>>() != expected {
        bail!(
            "{}: constraint header must be `p,q,s`, got {:?}",
            path.display(),
            headers
        );
    }
    let mut raw = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let p: usize = record[0]
            .trim()
            .parse()
            .with_context(|| format!("{}: row {}: bad p", path.display(), line + 2))?;
        let q: usize = record[1]
            .trim()
            .parse()
            .with_context(|| format!("{}: row {}: bad q", path.display(), line + 2))?;
        let s: f64 = record[2]
            .trim()
            .parse()
            .with_context(|| format!("{}: row {}: bad s", path.display(), line + 2))?;
        raw.push((p, q, s));
    }
    ConstraintSet::new(raw).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}

pub fn write_constraints(path: &Path, cons: &ConstraintSet) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    writer.write_record(["p", "q", "s"])?;
    for c in cons.constraints() {
        writer.write_record(&[c.p.to_string(), c.q.to_string(), c.s.to_string()])?;
    }
    writer.flush()?;
    Ok(())
}

/// Loads a fuzzy membership matrix (all columns numeric).
pub fn read_memberships(path: &Path) -> Result<MembershipMatrix> {
    let file =
        File::open(path).with_context(|| format!("cannot open membership file {}", path.display()))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let row: Vec<f64> = record
            .iter()
            .map(|v| {
                v.trim().parse().with_context(|| {
                    format!("{}: row {}: bad number {v:?}", path.display(), line + 2)
                })
            })
            .collect::<Result<_>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("{}: no membership rows", path.display());
    }
    MembershipMatrix::from_rows(&rows).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}

pub fn write_memberships(path: &Path, u: &MembershipMatrix) -> Result<()> {
    let mut writer =
        csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    let header: Vec<String> = (0..u.k()).map(|j| format!("u{j}")).collect();
    writer.write_record(&header)?;
    for i in 0..u.len() {
        let row: Vec<String> = u.row(i).iter().map(|v| v.to_string()).collect();
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Loads labels from any CSV with a `label` column.
pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let (_, labels) = read_dataset(path)?;
    labels.with_context(|| format!("{}: no `label` column", path.display()))
}

/// Reads a numeric matrix CSV (header row present, all columns numeric).
pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let row: Vec<f64> = record
            .iter()
            .map(|v| v.trim().parse::<f64>().map_err(Into::into))
            .collect::<Result<_>>()?;
        rows.push(row);
    }
    Ok(Matrix::from_rows(&rows))
}
