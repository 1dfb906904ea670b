//! Structural Hamming distance and adjacency-matrix F1 between CPDAGs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Cpdag;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("estimate has {estimate} nodes but the truth has {truth}")]
    NodeCountMismatch { estimate: usize, truth: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub shd: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Nonzero adjacency-matrix entries of the truth.
    pub true_edges: usize,
    /// Nonzero adjacency-matrix entries of the estimate.
    pub estimated_edges: usize,
    /// Entries set in both.
    pub correct_edges: usize,
}

fn check(estimate: &Cpdag, truth: &Cpdag) -> Result<usize, MetricsError> {
    let (e, t) = (estimate.node_count(), truth.node_count());
    if e != t {
        return Err(MetricsError::NodeCountMismatch { estimate: e, truth: t });
    }
    Ok(e)
}

/// `(a → b present, b → a present)` in the adjacency-matrix encoding.
fn entries(g: &Cpdag, a: usize, b: usize) -> (bool, bool) {
    let u = g.has_undirected(a, b);
    (u || g.has_directed(a, b), u || g.has_directed(b, a))
}

/// One unit per unordered pair whose edge differs: missing on one side,
/// reversed, or directed on one side and undirected on the other.
pub fn shd_cpdag(estimate: &Cpdag, truth: &Cpdag) -> Result<usize, MetricsError> {
    let n = check(estimate, truth)?;
    let mut shd = 0;
    for a in 0..n {
        for b in (a + 1)..n {
            if entries(estimate, a, b) != entries(truth, a, b) {
                shd += 1;
            }
        }
    }
    Ok(shd)
}

/// Precision, recall and F1 over adjacency-matrix entries, where an
/// undirected edge sets both entries. Also reports the SHD.
pub fn f1_cpdag(estimate: &Cpdag, truth: &Cpdag) -> Result<EvalReport, MetricsError> {
    let n = check(estimate, truth)?;
    let (mut est, mut tru, mut tp) = (0, 0, 0);
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let e = entries(estimate, a, b).0;
            let t = entries(truth, a, b).0;
            est += e as usize;
            tru += t as usize;
            tp += (e && t) as usize;
        }
    }
    let ratio = |num: usize, den: usize| if num == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(tp, est);
    let recall = ratio(tp, tru);
    let f1 = if precision > 0.0 && recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(EvalReport {
        shd: shd_cpdag(estimate, truth)?,
        precision,
        recall,
        f1,
        true_edges: tru,
        estimated_edges: est,
        correct_edges: tp,
    })
}
