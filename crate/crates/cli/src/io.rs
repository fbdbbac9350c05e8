//! CSV and JSON files on disk, plus report number formatting.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use dendrowave::Dendrogram;
use ndarray::Array2;

/// Numeric CSV with a header row. A first column headed `label` holds row
/// names; otherwise rows are named `x1..xn`.
#[derive(Clone, Debug)]
pub struct Table {
    pub labels: Vec<String>,
    pub columns: Vec<String>,
    pub values: Array2<f64>,
    pub has_labels: bool,
}

pub fn read_table(path: &Path) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let header = reader
        .headers()
        .with_context(|| format!("{}: cannot read header", path.display()))?
        .clone();
    let has_labels = header.get(0).is_some_and(|h| h.eq_ignore_ascii_case("label"));
    let skip = usize::from(has_labels);
    let columns: Vec<String> = header.iter().skip(skip).map(str::to_owned).collect();
    if columns.is_empty() {
        bail!("{}: no numeric columns", path.display());
    }
    let mut labels = Vec::new();
    let mut flat = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(|e| anyhow!("{}: row {row}: {e}", path.display()))?;
        if has_labels {
            labels.push(record[0].to_owned());
        }
        for (c, cell) in record.iter().enumerate().skip(skip) {
            let value: f64 = cell.parse().map_err(|_| {
                anyhow!("{}: row {row}, column {}: cannot parse {cell:?} as a number", path.display(), c + 1)
            })?;
            if !value.is_finite() {
                bail!("{}: row {row}, column {}: value {cell:?} is not finite", path.display(), c + 1);
            }
            flat.push(value);
        }
    }
    let n = flat.len() / columns.len();
    if !has_labels {
        labels = Dendrogram::default_labels(n);
    }
    let values = Array2::from_shape_vec((n, columns.len()), flat)?;
    Ok(Table { labels, columns, values, has_labels })
}

/// Writes a labelled table. `f64` cells use the shortest text that parses
/// back to the same value.
pub fn write_table<T: std::fmt::Display>(
    path: &Path,
    corner: &str,
    columns: &[String],
    labels: &[String],
    values: &Array2<T>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(std::iter::once(corner).chain(columns.iter().map(String::as_str)))?;
    for (label, row) in labels.iter().zip(values.rows()) {
        w.write_record(std::iter::once(label.clone()).chain(row.iter().map(|v| v.to_string())))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an integer table such as a branch-code matrix.
pub fn read_int_table(path: &Path) -> Result<(Vec<String>, Array2<i8>)> {
    let table = read_table(path)?;
    let mut out = Array2::zeros(table.values.raw_dim());
    for ((i, j), &v) in table.values.indexed_iter() {
        if v.fract() != 0.0 || v.abs() > 1.0 {
            bail!("{}: row {}, column {}: {v} is not one of -1, 0, 1", path.display(), i + 1, j + 1 + usize::from(table.has_labels));
        }
        out[[i, j]] = v as i8;
    }
    Ok((table.labels, out))
}

pub fn read_tree(path: &Path) -> Result<Dendrogram> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot open {}", path.display()))?;
    Dendrogram::from_json(&text).with_context(|| format!("{}: invalid dendrogram", path.display()))
}

pub fn write_tree(path: &Path, d: &Dendrogram) -> Result<()> {
    fs::write(path, d.to_json() + "\n").with_context(|| format!("cannot write {}", path.display()))
}

pub fn out_path(dir: &Path, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    Ok(dir.join(name))
}

/// `%.12g`: twelve significant digits, trailing zeros dropped.
pub fn sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { format!("{x}") };
    }
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..12).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        return format!("{mantissa}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    let decimals = (11 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_owned()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(sig12(0.0), "0");
        assert_eq!(sig12(1.0), "1");
        assert_eq!(sig12(1.0 / 3.0), "0.333333333333");
        assert_eq!(sig12(2.0f64.sqrt() * 1e3), "1414.21356237");
        assert_eq!(sig12(-2.5e-7), "-2.5e-07");
        assert_eq!(sig12(1.23456789e15), "1.23456789e+15");
        assert_eq!(sig12(3.331e-16), "3.331e-16");
    }
}
