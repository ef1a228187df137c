//! Repeated simulation studies of the structure estimator.

use std::collections::BTreeSet;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::harness::config::{Estimator, ExperimentConfig, Threshold, Truth};
use crate::harness::io::{float, percent, write_csv_with_header};
use crate::learning::{estimate_with_ordering, known_dag_estimate, score_differences};
use crate::metrics::{evaluate, MetricReport};
use crate::model::{Dag, Edge, MlbnModel};
use crate::rng::substream;

/// Outcome of one repetition. Failures are kept, not propagated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionRecord {
    pub d: usize,
    pub run_id: usize,
    pub report: Option<MetricReport>,
    pub acyclic: Option<bool>,
    /// Largest `|ĉ_ij - c*_ij|` over correctly estimated edges.
    pub weight_error: Option<f64>,
    pub error: Option<String>,
}

/// Mean or standard deviation of each metric.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricSummary {
    pub shd: f64,
    pub nshd: f64,
    pub fdr: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub d: usize,
    pub setting: String,
    pub completed: usize,
    pub failed: usize,
    pub mean: MetricSummary,
    pub sd: MetricSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub repetitions: usize,
    pub rows: Vec<ResultRow>,
    pub records: Vec<RepetitionRecord>,
    pub warnings: Vec<String>,
}

const METRICS: [&str; 5] = ["shd", "nshd", "fdr", "fpr", "tpr"];

impl MetricSummary {
    fn get(&self, name: &str) -> f64 {
        match name {
            "shd" => self.shd,
            "nshd" => self.nshd,
            "fdr" => self.fdr,
            "fpr" => self.fpr,
            "tpr" => self.tpr,
            _ => unreachable!(),
        }
    }
}

/// Arithmetic mean and sample standard deviation; `(NaN, NaN)` when empty.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = if n < 2 {
        0.0
    } else {
        let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    };
    (mean, sd)
}

fn setting_label(cfg: &ExperimentConfig) -> String {
    let inn = match cfg.innovation {
        crate::model::Innovation::Gaussian { .. } => "gaussian",
        crate::model::Innovation::Frechet { .. } => "frechet",
    };
    let order = if cfg.permute { "random" } else { "fixed" };
    let est = match cfg.estimator {
        Estimator::Ordering => "ordering",
        Estimator::KnownDag => "known_dag",
    };
    format!("{inn} p={} {order} {est}", cfg.p)
}

fn truth_edges(model: &MlbnModel, truth: Truth) -> Result<BTreeSet<Edge>> {
    Ok(match truth {
        Truth::Star => Dag::from_support(&model.observed_star())?.edge_set(),
        Truth::Dag => model.observed_dag().edge_set(),
    })
}

fn run_one(cfg: &ExperimentConfig, seed: u64, d: usize, run_id: usize) -> RepetitionRecord {
    let mut record = RepetitionRecord {
        d,
        run_id,
        report: None,
        acyclic: None,
        weight_error: None,
        error: None,
    };
    let outcome = (|| -> Result<()> {
        let mut rng = substream(seed, run_id as u64, d as u64);
        let model = MlbnModel::random(d, cfg.p, cfg.tau, cfg.permute, &mut rng)?;
        let sample = model.generate_sample(cfg.n, &cfg.innovation, &mut rng)?;
        let truth = truth_edges(&model, cfg.truth)?;
        let c_hat = match cfg.estimator {
            Estimator::Ordering => {
                let t = match cfg.threshold {
                    Threshold::Fixed(t) => t,
                    Threshold::Mode(_) => {
                        score_differences(&sample, &cfg.scoring)?.off_diagonal_median()
                    }
                };
                let est = estimate_with_ordering(&sample, t, &cfg.scoring)?;
                record.acyclic = Some(est.is_acyclic);
                est.c_hat
            }
            Estimator::KnownDag => {
                let dag = match cfg.truth {
                    Truth::Star => Dag::from_support(&model.observed_star())?,
                    Truth::Dag => model.observed_dag(),
                };
                record.acyclic = Some(true);
                known_dag_estimate(&sample, &dag)?
            }
        };
        let est: BTreeSet<Edge> = c_hat.finite_pairs().map(|(i, j)| (j, i)).collect();
        let star = model.observed_star();
        record.weight_error = truth
            .intersection(&est)
            .map(|&(j, i)| (c_hat.get(i, j) - star.get(i, j)).abs())
            .reduce(f64::max);
        record.report = Some(evaluate(d, &truth, &est)?);
        Ok(())
    })();
    if let Err(e) = outcome {
        record.error = Some(e.to_string());
    }
    record
}

fn summarize(d: usize, setting: &str, records: &[RepetitionRecord]) -> ResultRow {
    let reports: Vec<&MetricReport> = records.iter().filter_map(|r| r.report.as_ref()).collect();
    let column = |f: &dyn Fn(&MetricReport) -> Option<f64>| -> (f64, f64) {
        let v: Vec<f64> = reports.iter().filter_map(|r| f(r)).collect();
        mean_sd(&v)
    };
    let shd = column(&|r| Some(r.shd as f64));
    let nshd = column(&|r| Some(r.nshd));
    let fdr = column(&|r| Some(r.fdr));
    let fpr = column(&|r| Some(r.fpr));
    let tpr = column(&|r| r.tpr);
    ResultRow {
        d,
        setting: setting.to_owned(),
        completed: reports.len(),
        failed: records.len() - reports.len(),
        mean: MetricSummary {
            shd: shd.0,
            nshd: nshd.0,
            fdr: fdr.0,
            fpr: fpr.0,
            tpr: tpr.0,
        },
        sd: MetricSummary {
            shd: shd.1,
            nshd: nshd.1,
            fdr: fdr.1,
            fpr: fpr.1,
            tpr: tpr.1,
        },
    }
}

/// Runs `cfg.repetitions` independent repetitions for every `d`.
///
/// Repetition `r` at dimension `d` draws from its own random stream, so the
/// table does not depend on scheduling or thread count.
pub fn run_simulation(cfg: &ExperimentConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let seed = cfg.seed()?;
    let setting = setting_label(cfg);
    let mut warnings = Vec::new();
    if cfg.repetitions == 0 {
        warnings.push("repetitions = 0: nothing to run".to_owned());
    }
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for d in cfg.d.values() {
        let batch: Vec<RepetitionRecord> = (0..cfg.repetitions)
            .into_par_iter()
            .map(|r| run_one(cfg, seed, d, r))
            .collect();
        if cfg.repetitions > 0 {
            rows.push(summarize(d, &setting, &batch));
        }
        for r in batch.iter().filter(|r| r.error.is_some()) {
            warnings.push(format!(
                "d={d} run {}: {}",
                r.run_id,
                r.error.as_deref().unwrap_or_default()
            ));
        }
        records.extend(batch);
    }
    Ok(ResultTable {
        repetitions: cfg.repetitions,
        rows,
        records,
        warnings,
    })
}

impl ResultTable {
    pub fn row(&self, d: usize) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.d == d)
    }

    /// Table in the layout `mean% (sd%)` per rate.
    pub fn format(&self) -> String {
        let mut out = format!(
            "{:>4}  {:>16}  {:>16}  {:>16}  {:>16}  {:>6}\n",
            "d", "nSHD", "FDR", "FPR", "TPR", "reps"
        );
        for row in &self.rows {
            let cell =
                |m: &str| format!("{} ({})", percent(row.mean.get(m)), percent(row.sd.get(m)));
            out.push_str(&format!(
                "{:>4}  {:>16}  {:>16}  {:>16}  {:>16}  {:>6}\n",
                row.d,
                cell("nshd"),
                cell("fdr"),
                cell("fpr"),
                cell("tpr"),
                row.completed
            ));
        }
        out
    }

    /// Long-format summary: one line per `(d, metric)`.
    pub fn write_summary_csv(&self, path: &Path, cfg: &ExperimentConfig) -> Result<()> {
        let rows = self.rows.iter().flat_map(|row| {
            METRICS.iter().map(move |m| {
                vec![
                    row.d.to_string(),
                    row.setting.clone(),
                    m.to_string(),
                    float(row.mean.get(m)),
                    float(row.sd.get(m)),
                    row.completed.to_string(),
                    row.failed.to_string(),
                ]
            })
        });
        write_csv_with_header(
            path,
            cfg,
            &[
                "d",
                "setting",
                "metric",
                "mean",
                "sd",
                "completed",
                "failed",
            ],
            rows,
        )
    }

    /// One line per repetition.
    pub fn write_repetitions_csv(&self, path: &Path, cfg: &ExperimentConfig) -> Result<()> {
        let opt = |x: Option<f64>| x.map(float).unwrap_or_default();
        let rows = self.records.iter().map(|r| {
            let rep = r.report.as_ref();
            vec![
                r.d.to_string(),
                r.run_id.to_string(),
                rep.map(|m| m.shd.to_string()).unwrap_or_default(),
                opt(rep.map(|m| m.nshd)),
                opt(rep.map(|m| m.fdr)),
                opt(rep.map(|m| m.fpr)),
                opt(rep.and_then(|m| m.tpr)),
                r.acyclic.map(|a| a.to_string()).unwrap_or_default(),
                opt(r.weight_error),
                r.error.clone().unwrap_or_default(),
            ]
        });
        write_csv_with_header(
            path,
            cfg,
            &[
                "d",
                "run_id",
                "shd",
                "nshd",
                "fdr",
                "fpr",
                "tpr",
                "acyclic",
                "weight_error",
                "error",
            ],
            rows,
        )
    }
}
