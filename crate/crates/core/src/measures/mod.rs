//! Conditional dependence measures used as local scores by the search.
//!
//! A measure returns a statistic `T(x, y | z)` that is small when `x ⊥ y | z`
//! and large otherwise; the search only ever compares it against a threshold
//! `tau`.

mod knn;
mod pcorr;
mod rcd;

pub use knn::{brute_force_candidates, kd_tree_candidates, nearest_neighbors, KD_TREE_MIN_ROWS};
pub use pcorr::{gauss_partial_corr, PartialCorrelation};
pub use rcd::{rcd, rcd_raw, RcdMeasure};

use thiserror::Error;

use crate::dataset::{DataError, Dataset};
use crate::graph::{d_separated, Dag, NodeSet};
use crate::neural::NeuralError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("denominator is zero (the response is constant)")]
    DegenerateDenominator,
    #[error("variable {var} has {dim} columns but a scalar is required")]
    NotScalar { var: usize, dim: usize },
    #[error("need at least {need} rows, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("the conditioning regression is rank deficient")]
    SingularDesign,
    #[error("objective became non-finite at training step {step}")]
    NonFinite { step: usize },
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
}

/// The evaluator contract the search relies on.
///
/// Implementations are bound to their data at construction and must be
/// deterministic for a given query, so scores can be cached and computed in
/// any order.
pub trait ConditionalDependence: Sync {
    /// Number of variables (graph nodes) the measure is defined over.
    fn num_vars(&self) -> usize;

    /// `T(x, y | z)`.
    fn score(&self, x: usize, y: usize, z: NodeSet) -> Result<f64, MeasureError>;

    /// True if `score(x, y, z)` and `score(y, x, z)` estimate the same
    /// quantity, letting callers share one evaluation between them.
    fn is_symmetric(&self) -> bool {
        false
    }
}

impl<M: ConditionalDependence + ?Sized> ConditionalDependence for &M {
    fn num_vars(&self) -> usize {
        (**self).num_vars()
    }
    fn score(&self, x: usize, y: usize, z: NodeSet) -> Result<f64, MeasureError> {
        (**self).score(x, y, z)
    }
    fn is_symmetric(&self) -> bool {
        (**self).is_symmetric()
    }
}

impl<M: ConditionalDependence + ?Sized + Send> ConditionalDependence for Box<M> {
    fn num_vars(&self) -> usize {
        (**self).num_vars()
    }
    fn score(&self, x: usize, y: usize, z: NodeSet) -> Result<f64, MeasureError> {
        (**self).score(x, y, z)
    }
    fn is_symmetric(&self) -> bool {
        (**self).is_symmetric()
    }
}

/// A dataset plus the seed that drives any randomness in a measure.
#[derive(Debug, Clone, Copy)]
pub struct MeasureContext<'a> {
    pub dataset: &'a Dataset,
    pub seed: u64,
}

impl<'a> MeasureContext<'a> {
    pub fn new(dataset: &'a Dataset, seed: u64) -> Self {
        MeasureContext { dataset, seed }
    }
}

pub(crate) fn check_query(num_vars: usize, x: usize, y: usize, z: NodeSet) -> Result<(), MeasureError> {
    if x >= num_vars || y >= num_vars || z.iter().any(|v| v >= num_vars) {
        return Err(MeasureError::InvalidQuery(format!(
            "variable index out of range ({num_vars} variables)"
        )));
    }
    if x == y || z.contains(x) || z.contains(y) {
        return Err(MeasureError::InvalidQuery(format!(
            "x={x}, y={y} must be distinct and outside z={z:?}"
        )));
    }
    Ok(())
}

/// `d_separated(truth, x, y, z) ? 0 : 1`. Perfectly `tau`-consistent for any
/// `tau` in (0, 1), which makes it the reference instrument for the search.
pub fn oracle_measure(truth: &Dag, x: usize, y: usize, z: NodeSet) -> f64 {
    if d_separated(truth, x, y, z) {
        0.0
    } else {
        1.0
    }
}

#[derive(Debug, Clone)]
pub struct OracleMeasure {
    truth: Dag,
}

impl OracleMeasure {
    pub fn new(truth: Dag) -> Self {
        OracleMeasure { truth }
    }
}

impl ConditionalDependence for OracleMeasure {
    fn num_vars(&self) -> usize {
        self.truth.node_count()
    }

    fn score(&self, x: usize, y: usize, z: NodeSet) -> Result<f64, MeasureError> {
        check_query(self.num_vars(), x, y, z)?;
        Ok(oracle_measure(&self.truth, x, y, z))
    }

    fn is_symmetric(&self) -> bool {
        true
    }
}
