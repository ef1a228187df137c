//! Result files: provenance headers, CSV and JSON writers, sample files.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::polytrope::Sample;
use crate::VERSION;

/// `#`-prefixed lines opening every CSV: version, seed and resolved config.
pub fn provenance_header(cfg: &ExperimentConfig) -> String {
    format!(
        "# tropical-mlbn {VERSION}\n# seed: {}\n# config: {}\n",
        cfg.seed.map_or("none".to_owned(), |s| s.to_string()),
        cfg.to_json()
    )
}

pub fn provenance_json(cfg: &ExperimentConfig) -> serde_json::Value {
    json!({
        "version": VERSION,
        "seed": cfg.seed,
        "config": cfg,
    })
}

/// Writes the provenance header followed by a CSV body.
pub fn write_csv_with_header(
    path: &Path,
    cfg: &ExperimentConfig,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let mut buf = provenance_header(cfg).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        w.flush()?;
    }
    write_bytes(path, &buf)
}

/// Pretty JSON with a `provenance` member added to `value`'s object.
pub fn write_json<T: Serialize>(path: &Path, cfg: &ExperimentConfig, value: &T) -> Result<()> {
    let mut v = serde_json::to_value(value)?;
    match v.as_object_mut() {
        Some(obj) => {
            obj.insert("provenance".to_owned(), provenance_json(cfg));
        }
        None => v = json!({ "provenance": provenance_json(cfg), "data": v }),
    }
    let mut text = serde_json::to_string_pretty(&v)?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut f = fs::File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}

/// Formats a rate as a percentage with one decimal.
pub fn percent(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

/// Formats a float so that it parses back to the same value.
pub fn float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:?}")
    } else if x > 0.0 {
        "inf".to_owned()
    } else {
        "nan".to_owned()
    }
}

/// Writes a sample as CSV in the max-times domain, `exp(-x)` per coordinate,
/// so that reading it back with negative-log preprocessing recovers it.
pub fn write_sample_csv(path: &Path, names: &[String], sample: &Sample) -> Result<()> {
    if names.len() != sample.dim() {
        return Err(Error::DimensionMismatch {
            expected: sample.dim(),
            got: names.len(),
        });
    }
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(names)?;
        for p in sample.points() {
            w.write_record(p.coords().iter().map(|&x| float((-x).exp())))?;
        }
        w.flush()?;
    }
    write_bytes(path, &buf)
}
