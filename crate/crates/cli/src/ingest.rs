//! CSV ingestion into a [`Dataset`].

use std::path::Path;

use phdsens::{Dataset, Matrix};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Cells treated as a missing value.
pub const MISSING: [&str; 6] = ["", "NA", "N/A", "NaN", "nan", "null"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestConfig {
    /// Header name, or a 0-based column index when no header matches.
    pub response: String,
    pub log_response: bool,
    pub drop_missing_response: bool,
    /// `None` selects every numeric column except the response.
    pub predictors: Option<Vec<String>>,
    pub delimiter: u8,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self { response: "y".into(), log_response: false, drop_missing_response: true, predictors: None, delimiter: b',' }
    }
}

/// Parsed numeric columns together with what was resolved while reading them.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub y: Vec<f64>,
    pub x: Matrix<f64>,
    pub response: String,
    pub predictors: Vec<String>,
    pub rows_read: usize,
    pub rows_dropped: usize,
    /// Hex SHA-256 of the raw file bytes.
    pub sha256: String,
}

impl Ingested {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Checks the row count an estimator needs (`n ≥ p + 2`).
    pub fn dataset(&self) -> CliResult<Dataset<f64>> {
        let (n, p) = (self.n(), self.p());
        if n < p + 2 {
            return Err(CliError::TooFewRows { n, required: p + 2 });
        }
        Ok(Dataset::new(self.y.clone(), self.x.clone(), Some(self.predictors.clone()))?)
    }
}

fn resolve(header: &[String], spec: &str) -> CliResult<usize> {
    if let Some(i) = header.iter().position(|h| h == spec) {
        return Ok(i);
    }
    match spec.parse::<usize>() {
        Ok(i) if i < header.len() => Ok(i),
        _ => Err(CliError::MissingColumn(spec.to_string())),
    }
}

fn is_missing(cell: &str) -> bool {
    MISSING.contains(&cell)
}

pub fn ingest_csv(path: &Path, cfg: &IngestConfig) -> CliResult<Ingested> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    ingest_bytes(&bytes, cfg)
}

pub fn ingest_bytes(bytes: &[u8], cfg: &IngestConfig) -> CliResult<Ingested> {
    let sha256 = hex::encode(Sha256::digest(bytes));
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(cfg.delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.is_empty() {
        return Err(CliError::Input("empty header row".into()));
    }
    let records: Vec<csv::StringRecord> = reader.records().collect::<Result<_, _>>()?;
    let rows_read = records.len();

    let yi = resolve(&header, &cfg.response)?;
    let kept: Vec<(usize, &csv::StringRecord)> = records
        .iter()
        .enumerate()
        .filter(|(_, r)| !(cfg.drop_missing_response && is_missing(r.get(yi).unwrap_or(""))))
        .map(|(i, r)| (i + 1, r))
        .collect();
    let rows_dropped = rows_read - kept.len();

    let predictor_idx: Vec<usize> = match &cfg.predictors {
        Some(list) => list.iter().map(|s| resolve(&header, s)).collect::<CliResult<_>>()?,
        None => (0..header.len())
            .filter(|&c| c != yi)
            .filter(|&c| kept.first().is_some_and(|(_, r)| r.get(c).is_some_and(|v| v.parse::<f64>().is_ok())))
            .collect(),
    };
    if predictor_idx.contains(&yi) {
        return Err(CliError::Usage("the response cannot also be a predictor".into()));
    }
    if predictor_idx.len() < 2 {
        return Err(CliError::Input(format!("{} predictor columns resolved; at least 2 needed", predictor_idx.len())));
    }
    let p = predictor_idx.len();
    if kept.is_empty() {
        return Err(CliError::TooFewRows { n: 0, required: p + 2 });
    }

    let cell = |row: usize, rec: &csv::StringRecord, c: usize| -> CliResult<f64> {
        let raw = rec.get(c).unwrap_or("");
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(CliError::NonNumericCell { row, col: header[c].clone(), value: raw.to_string() }),
        }
    };
    let mut y = Vec::with_capacity(kept.len());
    let mut x = Vec::with_capacity(kept.len() * p);
    for &(row, rec) in &kept {
        if rec.len() != header.len() {
            return Err(CliError::Input(format!("row {row} has {} fields, header has {}", rec.len(), header.len())));
        }
        let mut v = cell(row, rec, yi)?;
        if cfg.log_response {
            if v <= 0.0 {
                return Err(CliError::Input(format!("row {row}: cannot take the log of response {v}")));
            }
            v = v.ln();
        }
        y.push(v);
        for &c in &predictor_idx {
            x.push(cell(row, rec, c)?);
        }
    }
    let predictors: Vec<String> = predictor_idx.iter().map(|&c| header[c].clone()).collect();
    let x = Matrix::from_row_major(kept.len(), p, x)?;
    Ok(Ingested { y, x, response: header[yi].clone(), predictors, rows_read, rows_dropped, sha256 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(resp: &str) -> IngestConfig {
        IngestConfig { response: resp.into(), ..Default::default() }
    }

    #[test]
    fn drops_missing_response() {
        let csv = "a,b,Salary\n1,2,100\n2,1,\n3,5,300\n4,4,250\n5,0,NA\n6,3,10\n";
        let got = ingest_bytes(csv.as_bytes(), &cfg("Salary")).unwrap();
        assert_eq!(got.n(), 4);
        assert_eq!(got.dataset().unwrap().n(), 4);
        assert_eq!(got.rows_dropped, 2);
        assert_eq!(got.predictors, vec!["a", "b"]);
    }

    #[test]
    fn toy_three_rows_keeps_two() {
        let csv = "a,b,s\n1,2,3\n4,5,\n7,9,8\n";
        let got = ingest_bytes(csv.as_bytes(), &cfg("s")).unwrap();
        assert_eq!(got.n(), 2);
        assert!(matches!(got.dataset(), Err(CliError::TooFewRows { n: 2, required: 4 })));
    }

    #[test]
    fn log_response() {
        let csv = "s,a,b\n1000,1,2\n10,2,1\n20,3,3\n30,4,1\n40,5,2\n";
        let c = IngestConfig { log_response: true, ..cfg("s") };
        let got = ingest_bytes(csv.as_bytes(), &c).unwrap();
        assert!((got.y[0] - 6.907755).abs() < 1e-6);
    }

    #[test]
    fn categorical_columns_are_skipped_but_bad_cells_fail() {
        let csv = "a,League,b,y\n1,A,2,1\n2,N,1,2\n3,A,3,3\n4,N,1,4\n5,A,2,6\n";
        let got = ingest_bytes(csv.as_bytes(), &cfg("y")).unwrap();
        assert_eq!(got.predictors, vec!["a", "b"]);
        let bad = "a,b,y\n1,2,1\n2,x,2\n3,3,3\n4,1,4\n5,2,6\n";
        let err = ingest_bytes(bad.as_bytes(), &cfg("y")).unwrap_err();
        assert!(matches!(err, CliError::NonNumericCell { row: 2, .. }), "{err:?}");
        let explicit = IngestConfig { predictors: Some(vec!["a".into(), "League".into()]), ..cfg("y") };
        assert!(matches!(ingest_bytes(csv.as_bytes(), &explicit), Err(CliError::NonNumericCell { .. })));
    }

    #[test]
    fn missing_column_and_index_lookup() {
        let csv = "a,b,c\n1,2,3\n2,1,1\n3,3,2\n4,1,5\n5,2,3\n";
        assert!(matches!(ingest_bytes(csv.as_bytes(), &cfg("salary")), Err(CliError::MissingColumn(_))));
        let got = ingest_bytes(csv.as_bytes(), &cfg("2")).unwrap();
        assert_eq!(got.response, "c");
    }

    #[test]
    fn delimiter_is_configurable() {
        let csv = "a;b;y\n1;2;1\n2;1;2\n3;3;3\n4;1;4\n5;2;6\n";
        let c = IngestConfig { delimiter: b';', ..cfg("y") };
        assert_eq!(ingest_bytes(csv.as_bytes(), &c).unwrap().p(), 2);
    }
}
