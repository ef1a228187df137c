//! Gap scores over coordinate differences and the thresholded estimator of
//! weights and structure.
//!
//! An atom at the maximum of `X_i - X_j` signals the edge `j -> i`. The
//! scores below are small when many observations pile up at the maximum.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{find_cycle, Dag, Edge};
use crate::polytrope::{min_bounding_matrix, Sample};
use crate::tropical::{TropicalMatrix, INF};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    /// `(D_(1) - D_(k))²` over the descending order statistics.
    TopK,
    /// `(mean(D) - Q(r_hi))² / n`.
    QuantileToMean,
    /// `(Q(r_hi) - Q(r_lo))² / n`.
    UpperQuantile,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreConfig {
    pub kind: ScoreKind,
    pub k: usize,
    pub r_hi: f64,
    pub r_lo: f64,
}

fn default_k() -> usize {
    30
}

fn default_r_hi() -> f64 {
    0.95
}

fn default_r_lo() -> f64 {
    0.5
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig::top_k(default_k())
    }
}

impl ScoreConfig {
    pub fn top_k(k: usize) -> Self {
        ScoreConfig {
            kind: ScoreKind::TopK,
            k,
            r_hi: default_r_hi(),
            r_lo: default_r_lo(),
        }
    }

    pub fn quantile_to_mean(r_hi: f64) -> Self {
        ScoreConfig {
            kind: ScoreKind::QuantileToMean,
            r_hi,
            ..ScoreConfig::default()
        }
    }

    pub fn upper_quantile(r_hi: f64, r_lo: f64) -> Self {
        ScoreConfig {
            kind: ScoreKind::UpperQuantile,
            r_hi,
            r_lo,
            ..ScoreConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |r: f64| r > 0.0 && r < 1.0;
        match self.kind {
            ScoreKind::TopK if self.k < 2 => Err(Error::InvalidScore(format!(
                "k must be >= 2, got {}",
                self.k
            ))),
            ScoreKind::QuantileToMean if !in_unit(self.r_hi) => Err(Error::InvalidScore(format!(
                "r_hi must lie in (0, 1), got {}",
                self.r_hi
            ))),
            ScoreKind::UpperQuantile
                if !in_unit(self.r_hi) || !in_unit(self.r_lo) || self.r_lo >= self.r_hi =>
            {
                Err(Error::InvalidScore(format!(
                    "need 0 < r_lo < r_hi < 1, got r_lo {} r_hi {}",
                    self.r_lo, self.r_hi
                )))
            }
            _ => Ok(()),
        }
    }

    /// Fewest observations the score can be evaluated on.
    pub fn min_observations(&self) -> usize {
        match self.kind {
            ScoreKind::TopK => self.k.max(2),
            _ => 2,
        }
    }
}

/// Type-7 empirical quantile of ascending-sorted data.
pub fn quantile_sorted(sorted: &[f64], r: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * r;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Score of a single vector of observations of `X_i - X_j`.
pub fn score_values(values: &mut [f64], cfg: &ScoreConfig) -> Result<f64> {
    cfg.validate()?;
    let n = values.len();
    if n < cfg.min_observations() {
        return Err(Error::TooFewObservations {
            needed: cfg.min_observations(),
            have: n,
        });
    }
    let s = match cfg.kind {
        ScoreKind::TopK => {
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let (_, kth, _) = values.select_nth_unstable_by(cfg.k - 1, |a, b| b.total_cmp(a));
            (max - *kth).powi(2)
        }
        ScoreKind::QuantileToMean => {
            let mean = values.iter().sum::<f64>() / n as f64;
            values.sort_unstable_by(f64::total_cmp);
            (mean - quantile_sorted(values, cfg.r_hi)).powi(2) / n as f64
        }
        ScoreKind::UpperQuantile => {
            values.sort_unstable_by(f64::total_cmp);
            (quantile_sorted(values, cfg.r_hi) - quantile_sorted(values, cfg.r_lo)).powi(2)
                / n as f64
        }
    };
    Ok(s)
}

/// Nonnegative scores `s_ij` for every ordered pair; diagonal zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScoreMatrix(Vec<Vec<f64>>);

impl ScoreMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.0
    }

    /// Median of the off-diagonal scores.
    pub fn off_diagonal_median(&self) -> f64 {
        let d = self.dim();
        let mut v: Vec<f64> = (0..d)
            .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .collect();
        if v.is_empty() {
            return 0.0;
        }
        v.sort_unstable_by(f64::total_cmp);
        quantile_sorted(&v, 0.5)
    }
}

pub fn score_differences(sample: &Sample, cfg: &ScoreConfig) -> Result<ScoreMatrix> {
    cfg.validate()?;
    let d = sample.dim();
    if sample.len() < cfg.min_observations() {
        return Err(Error::TooFewObservations {
            needed: cfg.min_observations(),
            have: sample.len(),
        });
    }
    let rows = (0..d)
        .into_par_iter()
        .map(|i| {
            let mut buf = Vec::with_capacity(sample.len());
            (0..d)
                .map(|j| {
                    if i == j {
                        return Ok(0.0);
                    }
                    buf.clear();
                    buf.extend(sample.points().iter().map(|p| p.diff(i, j)));
                    score_values(&mut buf, cfg)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScoreMatrix(rows))
}

/// Output of the thresholded estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    pub c_hat: TropicalMatrix,
    /// Surviving edges `(j, i)`, meaning `j -> i`.
    pub edges: BTreeSet<Edge>,
    pub scores: ScoreMatrix,
    pub is_acyclic: bool,
    /// A directed cycle among the surviving edges, when there is one.
    pub cycle: Option<Vec<usize>>,
    pub threshold: f64,
    pub config: ScoreConfig,
}

impl EstimationResult {
    /// The estimate as a DAG, when it is acyclic.
    pub fn dag(&self) -> Option<Dag> {
        let edges: Vec<(usize, usize, f64)> = self
            .edges
            .iter()
            .map(|&(j, i)| (j, i, self.c_hat.get(i, j)))
            .collect();
        Dag::from_edges(self.c_hat.dim(), &edges).ok()
    }

    pub fn to_json(&self) -> EstimationJson {
        EstimationJson {
            edges: self
                .edges
                .iter()
                .map(|&(j, i)| (j, i, self.c_hat.get(i, j)))
                .collect(),
            acyclic: self.is_acyclic,
            cycle: self.cycle.clone(),
            scores: self.scores.clone(),
            config: EstimationConfigJson {
                score: self.config,
                threshold: self.threshold,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationConfigJson {
    pub score: ScoreConfig,
    pub threshold: f64,
}

/// Result file: `{ "edges": [[j, i, w], …], "acyclic", "scores", "config" }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationJson {
    pub edges: Vec<(usize, usize, f64)>,
    pub acyclic: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle: Option<Vec<usize>>,
    pub scores: ScoreMatrix,
    pub config: EstimationConfigJson,
}

/// Prunes the minimum bounding matrix of `sample` with gap scores.
///
/// For each pair `{i, j}`: both directions go if `s_ij >= t` and
/// `s_ji >= t`; otherwise the lower score wins, and ties keep `i -> j`.
/// Cycles among surviving edges are reported, not repaired.
pub fn estimate_with_ordering(
    sample: &Sample,
    threshold: f64,
    cfg: &ScoreConfig,
) -> Result<EstimationResult> {
    let scores = score_differences(sample, cfg)?;
    let mut c_hat = min_bounding_matrix(sample)?;
    let d = sample.dim();
    for i in 0..d {
        for j in (i + 1)..d {
            let (s_ij, s_ji) = (scores.get(i, j), scores.get(j, i));
            if s_ij >= threshold && s_ji >= threshold {
                c_hat.set(i, j, INF);
                c_hat.set(j, i, INF);
            } else if s_ij < s_ji {
                // j -> i present
                c_hat.set(j, i, INF);
            } else {
                // i -> j present
                c_hat.set(i, j, INF);
            }
        }
    }
    let edges: BTreeSet<Edge> = c_hat.finite_pairs().map(|(i, j)| (j, i)).collect();
    let cycle = find_cycle(d, &edges);
    Ok(EstimationResult {
        c_hat,
        edges,
        scores,
        is_acyclic: cycle.is_none(),
        cycle,
        threshold,
        config: *cfg,
    })
}

/// `c̃` restricted to a known DAG, without taking the Kleene star.
pub fn known_dag_estimate(sample: &Sample, dag: &Dag) -> Result<TropicalMatrix> {
    min_bounding_matrix(sample)?.restrict_to_dag(dag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tropical::TropicalPoint;

    fn score_of(values: &[f64], cfg: &ScoreConfig) -> f64 {
        score_values(&mut values.to_vec(), cfg).unwrap()
    }

    #[test]
    fn top_k_examples() {
        let cfg = ScoreConfig::top_k(3);
        assert_eq!(score_of(&[5.0, 5.0, 5.0, 1.0, 0.0], &cfg), 0.0);
        assert_eq!(score_of(&[5.0, 4.0, 3.0, 2.0, 1.0], &cfg), 4.0);
        assert_eq!(score_of(&[1.0, 3.0, 2.0, 4.0, 5.0], &cfg), 4.0);
    }

    #[test]
    fn constant_data_scores_zero() {
        let data = [2.5; 10];
        for cfg in [
            ScoreConfig::top_k(3),
            ScoreConfig::quantile_to_mean(0.95),
            ScoreConfig::upper_quantile(0.95, 0.5),
        ] {
            assert_eq!(score_of(&data, &cfg), 0.0);
        }
    }

    #[test]
    fn type_seven_quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&v, 0.5), 3.0);
        assert!((quantile_sorted(&v, 0.95) - 4.8).abs() < 1e-12);
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        // (mean 3 - Q(0.95) 4.8)^2 / 5
        let s = score_of(&v, &ScoreConfig::quantile_to_mean(0.95));
        assert!((s - 1.8f64.powi(2) / 5.0).abs() < 1e-12);
        let s = score_of(&v, &ScoreConfig::upper_quantile(0.95, 0.5));
        assert!((s - 1.8f64.powi(2) / 5.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_observations() {
        let err = score_values(&mut [1.0, 2.0], &ScoreConfig::top_k(3)).unwrap_err();
        assert!(matches!(
            err,
            Error::TooFewObservations { needed: 3, have: 2 }
        ));
        assert!(score_values(&mut [1.0], &ScoreConfig::quantile_to_mean(0.9)).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(ScoreConfig::top_k(1).validate().is_err());
        assert!(ScoreConfig::quantile_to_mean(1.0).validate().is_err());
        assert!(ScoreConfig::upper_quantile(0.4, 0.6).validate().is_err());
        assert!(ScoreConfig::upper_quantile(0.9, 0.6).validate().is_ok());
    }

    #[test]
    fn zero_threshold_keeps_nothing() {
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|k| vec![0.0, (k % 3) as f64, (k % 5) as f64 * 0.5])
            .collect();
        let s = Sample::from_rows(&rows).unwrap();
        let est = estimate_with_ordering(&s, 0.0, &ScoreConfig::top_k(3)).unwrap();
        assert!(est.edges.is_empty());
        assert!(est.is_acyclic);
        assert_eq!(est.c_hat, TropicalMatrix::identity(3));
    }

    #[test]
    fn tie_keeps_forward_direction() {
        // X_2 - X_1 takes values ±1 symmetrically, so s_12 = s_21 = 0
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|k| vec![0.0, if k % 2 == 0 { 1.0 } else { -1.0 }])
            .collect();
        let s = Sample::from_rows(&rows).unwrap();
        let est = estimate_with_ordering(&s, 1.0, &ScoreConfig::top_k(3)).unwrap();
        assert_eq!(est.edges, [(0, 1)].into());
    }

    #[test]
    fn json_shape() {
        let pts = (0..5)
            .map(|k| TropicalPoint::new(&[0.0, k as f64]).unwrap())
            .collect();
        let s = Sample::new(2, pts).unwrap();
        let est = estimate_with_ordering(&s, 10.0, &ScoreConfig::top_k(2)).unwrap();
        let v = serde_json::to_value(est.to_json()).unwrap();
        assert!(v["edges"].is_array());
        assert_eq!(v["acyclic"], true);
        assert_eq!(v["config"]["threshold"], 10.0);
        assert_eq!(v["config"]["score"]["kind"], "top_k");
    }

    #[test]
    fn known_dag_estimate_on_edgeless_graph() {
        let s = Sample::from_rows(&[vec![0.0, 1.0, 2.0]]).unwrap();
        assert_eq!(
            known_dag_estimate(&s, &Dag::new(3)).unwrap(),
            TropicalMatrix::identity(3)
        );
    }
}
