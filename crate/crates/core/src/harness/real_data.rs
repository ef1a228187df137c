//! Estimation on user-supplied CSV data.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::config::{Preprocess, Threshold};
use crate::learning::{
    estimate_with_ordering, score_differences, EstimationJson, EstimationResult, ScoreConfig,
};
use crate::polytrope::Sample;
use crate::tropical::TropicalMatrix;

/// Numeric table read from CSV, before preprocessing.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Reads a headered CSV, keeping `columns` (in that order) when given.
///
/// Empty cells and values that fail to parse are errors carrying the
/// 1-based data row and the column name.
pub fn read_csv(path: &Path, columns: Option<&[String]>) -> Result<DataTable> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let picks: Vec<usize> = match columns {
        Some(names) => names
            .iter()
            .map(|n| {
                header
                    .iter()
                    .position(|h| h == n)
                    .ok_or_else(|| Error::Parse {
                        row: 0,
                        column: n.clone(),
                        message: "no such column".to_owned(),
                    })
            })
            .collect::<Result<_>>()?,
        None => (0..header.len()).collect(),
    };
    if picks.is_empty() {
        return Err(Error::Parse {
            row: 0,
            column: String::new(),
            message: "no columns selected".to_owned(),
        });
    }
    let mut rows = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record?;
        let row = picks
            .iter()
            .map(|&c| {
                let raw = record.get(c).unwrap_or("");
                raw.parse::<f64>().map_err(|e| Error::Parse {
                    row: k + 1,
                    column: header[c].clone(),
                    message: format!("{raw:?}: {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(DataTable {
        columns: picks.iter().map(|&c| header[c].clone()).collect(),
        rows,
    })
}

/// Applies `preprocess` and drops rows that cannot be used. Returns the
/// transformed rows and the number dropped.
pub fn preprocess_rows(rows: &[Vec<f64>], preprocess: Preprocess) -> (Vec<Vec<f64>>, usize) {
    let mut kept = Vec::with_capacity(rows.len());
    for row in rows {
        let out: Option<Vec<f64>> = row
            .iter()
            .map(|&x| match preprocess {
                Preprocess::NegLog if x > 0.0 && x.is_finite() => Some(-x.ln()),
                Preprocess::NegLog => None,
                Preprocess::None => x.is_finite().then_some(x),
            })
            .collect();
        if let Some(r) = out {
            kept.push(r);
        }
    }
    let dropped = rows.len() - kept.len();
    (kept, dropped)
}

#[derive(Debug, Clone)]
pub struct RealDataOutput {
    pub columns: Vec<String>,
    pub rows_used: usize,
    pub rows_dropped: usize,
    pub estimation: EstimationResult,
    /// Kleene star of the estimate, for comparison with estimators that
    /// target the star.
    pub c_hat_star: TropicalMatrix,
}

#[derive(Serialize)]
pub struct RealDataJson {
    pub d: usize,
    pub columns: Vec<String>,
    pub rows_used: usize,
    pub rows_dropped: usize,
    pub c_hat: TropicalMatrix,
    pub c_hat_star: TropicalMatrix,
    pub estimate: EstimationJson,
}

impl RealDataOutput {
    pub fn to_json(&self) -> RealDataJson {
        RealDataJson {
            d: self.columns.len(),
            columns: self.columns.clone(),
            rows_used: self.rows_used,
            rows_dropped: self.rows_dropped,
            c_hat: self.estimation.c_hat.clone(),
            c_hat_star: self.c_hat_star.clone(),
            estimate: self.estimation.to_json(),
        }
    }

    /// Human-readable report: edges by column name and both matrices.
    pub fn format(&self) -> String {
        let name = |v: usize| self.columns[v].as_str();
        let mut out = format!(
            "rows used: {}, dropped: {}\nthreshold: {}\nedges:\n",
            self.rows_used, self.rows_dropped, self.estimation.threshold
        );
        for &(from, to) in &self.estimation.edges {
            let w = self.estimation.c_hat.get(to, from);
            out.push_str(&format!("  {} -> {} ({w:.4})\n", name(from), name(to)));
        }
        match &self.estimation.cycle {
            Some(c) => {
                let names: Vec<&str> = c.iter().map(|&v| name(v)).collect();
                out.push_str(&format!("cycle: {}\n", names.join(" -> ")));
            }
            None => out.push_str("acyclic\n"),
        }
        out.push_str(&format!("estimate:\n{}", self.estimation.c_hat));
        out.push_str(&format!("kleene star of estimate:\n{}", self.c_hat_star));
        out
    }
}

/// Reads, preprocesses and estimates.
pub fn run_real_data(
    path: &Path,
    preprocess: Preprocess,
    columns: Option<&[String]>,
    scoring: &ScoreConfig,
    threshold: Threshold,
) -> Result<RealDataOutput> {
    let table = read_csv(path, columns)?;
    let (rows, dropped) = preprocess_rows(&table.rows, preprocess);
    if rows.is_empty() {
        return Err(Error::AllRowsDropped(dropped));
    }
    let sample = Sample::from_rows(&rows)?;
    let t = match threshold {
        Threshold::Fixed(t) => t,
        Threshold::Mode(_) => score_differences(&sample, scoring)?.off_diagonal_median(),
    };
    let estimation = estimate_with_ordering(&sample, t, scoring)?;
    // cycles of a bounding matrix have nonnegative weight, so this succeeds
    let c_hat_star = estimation.c_hat.kleene_star()?;
    Ok(RealDataOutput {
        columns: table.columns,
        rows_used: rows.len(),
        rows_dropped: dropped,
        estimation,
        c_hat_star,
    })
}
