//! Structural comparison of a true DAG with an estimated directed graph.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Edge;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub shd: usize,
    pub nshd: f64,
    pub fdr: f64,
    pub fpr: f64,
    /// Absent when the true graph has no edges but the estimate does.
    pub tpr: Option<f64>,
}

impl MetricReport {
    pub fn perfect() -> Self {
        MetricReport {
            shd: 0,
            nshd: 0.0,
            fdr: 0.0,
            fpr: 0.0,
            tpr: Some(1.0),
        }
    }
}

fn check_edges(d: usize, edges: &BTreeSet<Edge>) -> Result<()> {
    for &(from, to) in edges {
        if from >= d || to >= d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: from.max(to) + 1,
            });
        }
        if from == to {
            return Err(Error::InvalidEdge {
                from,
                to,
                reason: "self-loop",
            });
        }
    }
    Ok(())
}

/// SHD counts one per unordered pair whose status differs (a reversal is
/// one error). Rates use ordered pairs, so a reversed edge is both a false
/// discovery and a missed true edge.
pub fn evaluate(d: usize, truth: &BTreeSet<Edge>, est: &BTreeSet<Edge>) -> Result<MetricReport> {
    check_edges(d, truth)?;
    check_edges(d, est)?;

    let mut shd = 0;
    for i in 0..d {
        for j in (i + 1)..d {
            let t = (truth.contains(&(i, j)), truth.contains(&(j, i)));
            let e = (est.contains(&(i, j)), est.contains(&(j, i)));
            if t != e {
                shd += 1;
            }
        }
    }
    let n_true = truth.len();
    let n_est = est.len();
    let true_pos = truth.intersection(est).count();
    let false_pos = n_est - true_pos;
    let non_edges = d * d.saturating_sub(1) - n_true;

    let ratio = |num: usize, den: usize| {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let tpr = match (n_true, n_est) {
        (0, 0) => Some(1.0),
        (0, _) => None,
        _ => Some(true_pos as f64 / n_true as f64),
    };
    Ok(MetricReport {
        shd,
        nshd: ratio(shd, n_true + n_est),
        fdr: ratio(false_pos, n_est),
        fpr: ratio(false_pos, non_edges),
        tpr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(edges: &[Edge]) -> BTreeSet<Edge> {
        edges.iter().copied().collect()
    }

    #[test]
    fn identical_graphs() {
        let g = set(&[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(evaluate(3, &g, &g).unwrap(), MetricReport::perfect());
    }

    #[test]
    fn single_reversal() {
        let r = evaluate(3, &set(&[(0, 1)]), &set(&[(1, 0)])).unwrap();
        assert_eq!(r.shd, 1);
        assert_eq!(r.nshd, 0.5);
        assert_eq!(r.fdr, 1.0);
        assert_eq!(r.tpr, Some(0.0));
        assert_eq!(r.fpr, 1.0 / 5.0);
    }

    #[test]
    fn missing_and_extra() {
        let r = evaluate(4, &set(&[(0, 1), (0, 2)]), &set(&[(0, 1), (3, 2)])).unwrap();
        assert_eq!(r.shd, 2);
        assert_eq!(r.nshd, 0.5);
        assert_eq!(r.fdr, 0.5);
        assert_eq!(r.tpr, Some(0.5));
        assert_eq!(r.fpr, 0.1);
    }

    #[test]
    fn empty_conventions() {
        let empty = BTreeSet::new();
        let r = evaluate(3, &empty, &empty).unwrap();
        assert_eq!(r, MetricReport::perfect());
        let r = evaluate(3, &empty, &set(&[(0, 1)])).unwrap();
        assert_eq!(r.tpr, None);
        assert_eq!(r.fdr, 1.0);
        let r = evaluate(3, &set(&[(0, 1)]), &empty).unwrap();
        assert_eq!(r.fdr, 0.0);
        assert_eq!(r.tpr, Some(0.0));
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(matches!(
            evaluate(2, &set(&[(0, 2)]), &BTreeSet::new()),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(evaluate(2, &set(&[(1, 1)]), &BTreeSet::new()).is_err());
    }
}
