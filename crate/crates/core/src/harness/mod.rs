//! Config-driven experiments: simulation tables, estimation on CSV data,
//! censuses of dual triangulations and metric evaluation of saved graphs.
//!
//! Every output file starts with the crate version, the seed and the fully
//! resolved config. Nothing time-dependent is written, so a rerun with the
//! same config reproduces the files byte for byte.

pub mod census;
pub mod config;
pub mod io;
pub mod real_data;
pub mod simulate;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::metrics::{evaluate, MetricReport};
use crate::model::Edge;

pub use census::{run_census, CensusReport};
pub use config::{ExperimentConfig, Mode, Preprocess, Threshold};
pub use real_data::{run_real_data, RealDataOutput};
pub use simulate::{run_simulation, ResultTable};

/// Runs `f` on a dedicated pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

#[derive(Deserialize)]
struct GraphFile {
    d: Option<usize>,
    edges: Vec<Vec<f64>>,
}

/// Reads a graph from JSON: `{"d": .., "edges": [[from, to, ...], ...]}`.
/// Extra entries per edge (weights) are ignored; `d` is optional.
pub fn read_graph(path: &Path) -> Result<(Option<usize>, BTreeSet<Edge>)> {
    let text = std::fs::read_to_string(path)?;
    let g: GraphFile = serde_json::from_str(&text)?;
    let mut edges = BTreeSet::new();
    for (k, e) in g.edges.iter().enumerate() {
        let node = |x: Option<&f64>| -> Result<usize> {
            match x {
                Some(&v) if v >= 0.0 && v.fract() == 0.0 => Ok(v as usize),
                _ => Err(Error::Parse {
                    row: k + 1,
                    column: "edges".to_owned(),
                    message: format!("bad edge {e:?}"),
                }),
            }
        };
        edges.insert((node(e.first())?, node(e.get(1))?));
    }
    Ok((g.d, edges))
}

/// Compares two saved graphs.
pub fn run_metrics(truth: &Path, estimate: &Path) -> Result<MetricReport> {
    let (d1, e1) = read_graph(truth)?;
    let (d2, e2) = read_graph(estimate)?;
    let inferred = e1
        .iter()
        .chain(&e2)
        .map(|&(a, b)| a.max(b) + 1)
        .max()
        .unwrap_or(0);
    let d = d1.into_iter().chain(d2).max().unwrap_or(inferred);
    evaluate(d, &e1, &e2)
}

/// Runs the configured mode, writes its files under `out` and returns a
/// report for the terminal.
pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<String> {
    cfg.validate()?;
    match cfg.mode {
        Mode::Simulate => {
            let table = run_simulation(cfg)?;
            table.write_summary_csv(&out.join("simulation.csv"), cfg)?;
            table.write_repetitions_csv(&out.join("repetitions.csv"), cfg)?;
            let mut text = table.format();
            for w in &table.warnings {
                text.push_str(&format!("warning: {w}\n"));
            }
            Ok(text)
        }
        Mode::Census => {
            let report = run_census(cfg)?;
            report.write(out, cfg)?;
            Ok(report.format())
        }
        Mode::Estimate => {
            let path = cfg.data.path.as_deref().expect("validated");
            let result = run_real_data(
                path,
                cfg.data.preprocess,
                cfg.data.columns.as_deref(),
                &cfg.scoring,
                cfg.threshold,
            )?;
            io::write_json(&out.join("estimate.json"), cfg, &result.to_json())?;
            Ok(result.format())
        }
        Mode::Metrics => {
            let truth = cfg.metrics.truth.as_deref().expect("validated");
            let estimate = cfg.metrics.estimate.as_deref().expect("validated");
            let report = run_metrics(truth, estimate)?;
            io::write_json(&out.join("metrics.json"), cfg, &report)?;
            Ok(format!(
                "shd {}\nnshd {}\nfdr {}\nfpr {}\ntpr {}\n",
                report.shd,
                report.nshd,
                report.fdr,
                report.fpr,
                report.tpr.map_or("undefined".to_owned(), |t| t.to_string())
            ))
        }
    }
}

/// Output directory: explicit argument, then config, then the current one.
pub fn output_dir(cli: Option<PathBuf>, cfg: &ExperimentConfig) -> PathBuf {
    cli.or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("."))
}
