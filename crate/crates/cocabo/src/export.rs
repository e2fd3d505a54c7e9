//! Plot-ready CSV tables.
//!
//! Floats are written with Rust's shortest round-trip formatting, so
//! reading a table back gives the exact values that were written.

use std::io::{Read, Write};

use cocabo_core::metrics::{aggregate, Band, SelectionFrequencySeries};

pub const REGRET_HEADER: [&str; 4] = ["iteration", "mean_normalized_regret", "ci_low", "ci_high"];

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("unexpected header {0:?}")]
    Header(Vec<String>),
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("no series to combine")]
    Empty,
}

/// Per-iteration means over seeds of the cumulative selection fractions.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyTable {
    pub scopes: Vec<String>,
    /// `rows[t][k]` belongs to iteration `t + 1` and scope `k`.
    pub rows: Vec<Vec<f64>>,
}

impl FrequencyTable {
    /// Averages per-seed series. Columns are the union of the scope names
    /// in first-seen order; a scope missing from a seed counts as 0 there.
    pub fn mean_of(series: &[SelectionFrequencySeries]) -> Result<FrequencyTable, CsvError> {
        let first = series.first().ok_or(CsvError::Empty)?;
        let len = first.fractions.len();
        let mut scopes: Vec<String> = Vec::new();
        for s in series {
            if s.fractions.len() != len {
                return Err(CsvError::Row {
                    row: s.fractions.len().min(len) + 1,
                    message: "series lengths differ".into(),
                });
            }
            for name in &s.scopes {
                if !scopes.contains(name) {
                    scopes.push(name.clone());
                }
            }
        }
        let columns: Vec<Vec<Option<usize>>> = series
            .iter()
            .map(|s| scopes.iter().map(|n| s.scopes.iter().position(|m| m == n)).collect())
            .collect();
        let mut values = vec![0.0; series.len()];
        let rows = (0..len)
            .map(|t| {
                (0..scopes.len())
                    .map(|k| {
                        for (i, s) in series.iter().enumerate() {
                            values[i] = columns[i][k].map_or(0.0, |c| s.fractions[t][c]);
                        }
                        aggregate(&values).mean
                    })
                    .collect()
            })
            .collect();
        Ok(FrequencyTable { scopes, rows })
    }

    pub fn column(&self, scope: &str) -> Option<Vec<f64>> {
        let k = self.scopes.iter().position(|s| s == scope)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

pub fn write_regret_csv<W: Write>(w: W, bands: &[Band]) -> Result<(), CsvError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(REGRET_HEADER)?;
    for (t, b) in bands.iter().enumerate() {
        out.write_record([(t + 1).to_string(), b.mean.to_string(), b.lo.to_string(), b.hi.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_regret_csv<R: Read>(r: R) -> Result<Vec<Band>, CsvError> {
    let mut input = csv::Reader::from_reader(r);
    let header: Vec<String> = input.headers()?.iter().map(str::to_string).collect();
    if header != REGRET_HEADER {
        return Err(CsvError::Header(header));
    }
    let mut bands = Vec::new();
    for (i, row) in input.records().enumerate() {
        let row = row?;
        check_iteration(&row, i)?;
        let v = floats(&row, i)?;
        bands.push(Band { mean: v[0], lo: v[1], hi: v[2] });
    }
    Ok(bands)
}

pub fn write_frequency_csv<W: Write>(w: W, table: &FrequencyTable) -> Result<(), CsvError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(std::iter::once("iteration").chain(table.scopes.iter().map(String::as_str)))?;
    for (t, row) in table.rows.iter().enumerate() {
        out.write_record(std::iter::once((t + 1).to_string()).chain(row.iter().map(f64::to_string)))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_frequency_csv<R: Read>(r: R) -> Result<FrequencyTable, CsvError> {
    let mut input = csv::Reader::from_reader(r);
    let header: Vec<String> = input.headers()?.iter().map(str::to_string).collect();
    if header.first().map(String::as_str) != Some("iteration") {
        return Err(CsvError::Header(header));
    }
    let mut rows = Vec::new();
    for (i, row) in input.records().enumerate() {
        let row = row?;
        check_iteration(&row, i)?;
        rows.push(floats(&row, i)?);
    }
    Ok(FrequencyTable { scopes: header[1..].to_vec(), rows })
}

fn check_iteration(row: &csv::StringRecord, i: usize) -> Result<(), CsvError> {
    match row.get(0).map(str::parse::<usize>) {
        Some(Ok(t)) if t == i + 1 => Ok(()),
        _ => Err(CsvError::Row { row: i + 1, message: format!("expected iteration {}", i + 1) }),
    }
}

fn floats(row: &csv::StringRecord, i: usize) -> Result<Vec<f64>, CsvError> {
    row.iter()
        .skip(1)
        .map(|f| {
            f.parse::<f64>()
                .map_err(|e| CsvError::Row { row: i + 1, message: format!("`{f}`: {e}") })
        })
        .collect()
}
