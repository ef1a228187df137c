//! Census runs over the configured dimensions.

use std::collections::BTreeSet;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::harness::config::ExperimentConfig;
use crate::harness::io::{float, write_csv_with_header, write_json};
use crate::polytrope::Subdivision;
use crate::set_cover::{census, TypeCensus};

#[derive(Debug, Clone)]
pub struct CensusReport {
    pub censuses: Vec<TypeCensus>,
}

#[derive(Serialize)]
struct TypeJson<'a> {
    type_id: usize,
    d: usize,
    count_seen: usize,
    greedy_min: usize,
    exact_min: Option<usize>,
    subdivision: &'a Subdivision,
}

#[derive(Serialize)]
struct TypesJson<'a> {
    types: Vec<TypeJson<'a>>,
}

/// Runs a census for every configured `d` with `cfg.census.samples` draws.
pub fn run_census(cfg: &ExperimentConfig) -> Result<CensusReport> {
    cfg.validate()?;
    let seed = cfg.seed()?;
    let censuses = cfg
        .d
        .values()
        .into_iter()
        .map(|d| census(d, cfg.census.samples, seed, &cfg.census.options))
        .collect::<Result<Vec<_>>>()?;
    Ok(CensusReport { censuses })
}

fn sizes_label(sizes: &BTreeSet<usize>) -> String {
    let parts: Vec<String> = sizes.iter().map(usize::to_string).collect();
    format!("{{{}}}", parts.join(","))
}

impl CensusReport {
    pub fn get(&self, d: usize) -> Option<&TypeCensus> {
        self.censuses.iter().find(|c| c.d == d)
    }

    /// One line per dimension with the observed cover sizes.
    pub fn format(&self) -> String {
        let mut out = String::new();
        for c in &self.censuses {
            out.push_str(&format!(
                "d={} draws={} types={} sizes={} greedy_agreement={:.1}%\n",
                c.d,
                c.draws,
                c.types.len(),
                sizes_label(&c.observed_sizes()),
                100.0 * c.greedy_agreement()
            ));
        }
        out
    }

    /// Writes `census.csv` (one row per type), `census_summary.csv` (one row
    /// per dimension) and `census_types.json` (the subdivisions).
    pub fn write(&self, dir: &Path, cfg: &ExperimentConfig) -> Result<()> {
        let mut type_rows = Vec::new();
        let mut types_json = Vec::new();
        let mut type_id = 0;
        for c in &self.censuses {
            for (sub, s) in &c.types {
                type_rows.push(vec![
                    type_id.to_string(),
                    c.d.to_string(),
                    s.count_seen.to_string(),
                    s.min_cover_greedy.to_string(),
                    s.min_cover_exact.map(|e| e.to_string()).unwrap_or_default(),
                ]);
                types_json.push(TypeJson {
                    type_id,
                    d: c.d,
                    count_seen: s.count_seen,
                    greedy_min: s.min_cover_greedy,
                    exact_min: s.min_cover_exact,
                    subdivision: sub,
                });
                type_id += 1;
            }
        }
        write_csv_with_header(
            &dir.join("census.csv"),
            cfg,
            &["type_id", "d", "count_seen", "greedy_min", "exact_min"],
            type_rows,
        )?;
        let summary = self.censuses.iter().map(|c| {
            let max_cells = c
                .types
                .keys()
                .map(Subdivision::num_cells)
                .max()
                .unwrap_or(0);
            let facets = c
                .types
                .keys()
                .map(|s| s.universe().len())
                .max()
                .unwrap_or(0);
            vec![
                c.d.to_string(),
                c.draws.to_string(),
                c.rejected.to_string(),
                c.types.len().to_string(),
                max_cells.to_string(),
                facets.to_string(),
                sizes_label(&c.observed_sizes()),
                float(c.greedy_agreement()),
            ]
        });
        write_csv_with_header(
            &dir.join("census_summary.csv"),
            cfg,
            &[
                "d",
                "draws",
                "rejected",
                "types",
                "pseudovertices",
                "facets",
                "cover_sizes",
                "greedy_agreement",
            ],
            summary,
        )?;
        write_json(
            &dir.join("census_types.json"),
            cfg,
            &TypesJson { types: types_json },
        )
    }
}
