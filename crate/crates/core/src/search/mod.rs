//! Greedy equivalence search over CPDAGs driven by a conditional dependence
//! measure and a threshold `tau`.
//!
//! The forward phase applies the insert with the largest local score while
//! that score exceeds `tau`; the backward phase applies the delete with the
//! smallest local score while it is below `tau`. The local score of an
//! operator is `T(x, y | Pa_y)` evaluated in the DAG the operator induces.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{complete, na_set, validity_delete, validity_insert, Cpdag, GraphError, NodeSet, Pdag};
use crate::measures::{ConditionalDependence, MeasureError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OperatorKind {
    Insert,
    Delete,
}

/// `Insert(x, y, t)` or `Delete(x, y, h)`; `aux` holds `t` or `h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EdgeOperator {
    pub kind: OperatorKind,
    pub x: usize,
    pub y: usize,
    pub aux: NodeSet,
}

impl EdgeOperator {
    pub fn insert(x: usize, y: usize, t: NodeSet) -> Self {
        EdgeOperator {
            kind: OperatorKind::Insert,
            x,
            y,
            aux: t,
        }
    }

    pub fn delete(x: usize, y: usize, h: NodeSet) -> Self {
        EdgeOperator {
            kind: OperatorKind::Delete,
            x,
            y,
            aux: h,
        }
    }
}

impl std::fmt::Display for EdgeOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self.kind {
            OperatorKind::Insert => "Insert",
            OperatorKind::Delete => "Delete",
        };
        write!(f, "{name}({}, {}, {:?})", self.x, self.y, self.aux)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GesConfig {
    pub tau: f64,
    /// Cap on `|t|` and `|h|`; `None` enumerates every subset.
    pub max_aux_size: Option<usize>,
    pub seed: u64,
}

impl GesConfig {
    pub fn new(tau: f64) -> Self {
        GesConfig {
            tau,
            max_aux_size: None,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(SearchError::InvalidConfig(format!("tau must be positive, got {}", self.tau)));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
    #[error("scoring {operator} with conditioning set {conditioning:?} failed: {source}")]
    Measure {
        operator: EdgeOperator,
        conditioning: NodeSet,
        #[source]
        source: MeasureError,
    },
    #[error("scoring {operator} returned the non-finite value {value}")]
    NonFiniteScore { operator: EdgeOperator, value: f64 },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub phase: Phase,
    pub operator: EdgeOperator,
    pub score: f64,
    /// Adjacencies in the CPDAG after the step.
    pub edge_count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GesTrace {
    pub steps: Vec<TraceStep>,
    /// Distinct measure evaluations.
    pub evaluations: usize,
    pub cache_hits: usize,
}

/// Result of one FES or BES step.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub cpdag: Cpdag,
    /// The operator applied and its score, if any.
    pub applied: Option<(EdgeOperator, f64)>,
}

impl Step {
    pub fn applied(&self) -> bool {
        self.applied.is_some()
    }
}

/// Every valid insert on `cpdag`, ordered by `x`, then `y`, then `t`
/// (as a bit mask).
pub fn enumerate_inserts(cpdag: &Cpdag, max_aux_size: Option<usize>) -> Vec<EdgeOperator> {
    let n = cpdag.node_count();
    let mut out = Vec::new();
    for x in 0..n {
        for y in 0..n {
            if x == y || cpdag.is_adjacent(x, y) {
                continue;
            }
            let candidates = cpdag
                .undirected_neighbors(y)
                .difference(cpdag.adjacents(x));
            for t in candidates.subsets(max_aux_size) {
                if validity_insert(cpdag, x, y, t) {
                    out.push(EdgeOperator::insert(x, y, t));
                }
            }
        }
    }
    out
}

/// Every valid delete on `cpdag`. Undirected edges contribute both
/// orientations, directed edges only their own.
pub fn enumerate_deletes(cpdag: &Cpdag, max_aux_size: Option<usize>) -> Vec<EdgeOperator> {
    let n = cpdag.node_count();
    let mut out = Vec::new();
    for x in 0..n {
        for y in 0..n {
            if !(cpdag.has_directed(x, y) || cpdag.has_undirected(x, y)) {
                continue;
            }
            for h in na_set(cpdag, y, x).subsets(max_aux_size) {
                if validity_delete(cpdag, x, y, h) {
                    out.push(EdgeOperator::delete(x, y, h));
                }
            }
        }
    }
    out
}

/// Parents of `y` in the DAG induced by `op`.
pub fn conditioning_set(cpdag: &Cpdag, op: &EdgeOperator) -> NodeSet {
    let pa = cpdag.parents(op.y);
    let na = na_set(cpdag, op.y, op.x);
    match op.kind {
        OperatorKind::Insert => pa.union(na).union(op.aux),
        OperatorKind::Delete => pa.union(na.difference(op.aux)).without(op.x),
    }
}

/// Applies `op` to a copy of `cpdag` and re-completes the result.
pub fn apply_operator(cpdag: &Cpdag, op: &EdgeOperator) -> Result<Cpdag, GraphError> {
    let mut p: Pdag = cpdag.clone();
    match op.kind {
        OperatorKind::Insert => {
            p.add_directed(op.x, op.y)?;
            for t in op.aux {
                p.orient(t, op.y);
            }
        }
        OperatorKind::Delete => {
            p.remove_adjacency(op.x, op.y);
            for h in op.aux {
                p.orient(op.y, h);
                p.orient(op.x, h);
            }
        }
    }
    complete(&p)
}

/// Memoized local scores keyed by `(x, y, conditioning set)`. For symmetric
/// measures `(x, y)` and `(y, x)` share an entry.
#[derive(Debug, Clone, Default)]
pub struct ScoreCache {
    scores: HashMap<(usize, usize, NodeSet), f64>,
    symmetric: bool,
    hits: usize,
}

impl ScoreCache {
    pub fn new(symmetric: bool) -> Self {
        ScoreCache {
            scores: HashMap::new(),
            symmetric,
            hits: 0,
        }
    }

    fn key(&self, x: usize, y: usize, z: NodeSet) -> (usize, usize, NodeSet) {
        if self.symmetric && y < x {
            (y, x, z)
        } else {
            (x, y, z)
        }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn hits(&self) -> usize {
        self.hits
    }

    /// Scores every operator, evaluating uncached queries in parallel.
    /// Errors are reported for the first failing operator in list order.
    fn score_all<M: ConditionalDependence + ?Sized>(
        &mut self,
        cpdag: &Cpdag,
        ops: &[EdgeOperator],
        measure: &M,
    ) -> Result<Vec<f64>, SearchError> {
        let keyed: Vec<_> = ops
            .iter()
            .map(|op| {
                let z = conditioning_set(cpdag, op);
                (self.key(op.x, op.y, z), z)
            })
            .collect();
        let mut pending: Vec<(usize, (usize, usize, NodeSet))> = Vec::new();
        let mut queued = std::collections::HashSet::new();
        for (i, (key, _)) in keyed.iter().enumerate() {
            if self.scores.contains_key(key) {
                self.hits += 1;
            } else if queued.insert(*key) {
                pending.push((i, *key));
            } else {
                self.hits += 1;
            }
        }
        let results: Vec<Result<f64, MeasureError>> = pending
            .par_iter()
            .map(|&(_, (x, y, z))| measure.score(x, y, z))
            .collect();
        for (&(i, key), res) in pending.iter().zip(results) {
            let op = ops[i];
            let value = res.map_err(|source| SearchError::Measure {
                operator: op,
                conditioning: keyed[i].1,
                source,
            })?;
            if !value.is_finite() {
                return Err(SearchError::NonFiniteScore { operator: op, value });
            }
            self.scores.insert(key, value);
        }
        Ok(keyed.iter().map(|(key, _)| self.scores[key]).collect())
    }
}

/// One forward step with a caller-owned cache.
pub fn fes_step_cached<M: ConditionalDependence + ?Sized>(
    cpdag: &Cpdag,
    measure: &M,
    config: &GesConfig,
    cache: &mut ScoreCache,
) -> Result<Step, SearchError> {
    let ops = enumerate_inserts(cpdag, config.max_aux_size);
    let scores = cache.score_all(cpdag, &ops, measure)?;
    let mut best: Option<(usize, f64)> = None;
    for (i, &s) in scores.iter().enumerate() {
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    match best {
        Some((i, s)) if s > config.tau => Ok(Step {
            cpdag: apply_operator(cpdag, &ops[i])?,
            applied: Some((ops[i], s)),
        }),
        _ => Ok(Step {
            cpdag: cpdag.clone(),
            applied: None,
        }),
    }
}

/// One backward step with a caller-owned cache.
pub fn bes_step_cached<M: ConditionalDependence + ?Sized>(
    cpdag: &Cpdag,
    measure: &M,
    config: &GesConfig,
    cache: &mut ScoreCache,
) -> Result<Step, SearchError> {
    let ops = enumerate_deletes(cpdag, config.max_aux_size);
    let scores = cache.score_all(cpdag, &ops, measure)?;
    let mut best: Option<(usize, f64)> = None;
    for (i, &s) in scores.iter().enumerate() {
        if best.is_none_or(|(_, b)| s < b) {
            best = Some((i, s));
        }
    }
    match best {
        Some((i, s)) if s < config.tau => Ok(Step {
            cpdag: apply_operator(cpdag, &ops[i])?,
            applied: Some((ops[i], s)),
        }),
        _ => Ok(Step {
            cpdag: cpdag.clone(),
            applied: None,
        }),
    }
}

/// Applies the highest-scoring valid insert if its score exceeds `tau`.
/// Ties go to the first operator in enumeration order.
pub fn fes_step<M: ConditionalDependence + ?Sized>(
    cpdag: &Cpdag,
    measure: &M,
    config: &GesConfig,
) -> Result<Step, SearchError> {
    config.validate()?;
    fes_step_cached(cpdag, measure, config, &mut ScoreCache::new(measure.is_symmetric()))
}

/// Applies the lowest-scoring valid delete if its score is below `tau`.
pub fn bes_step<M: ConditionalDependence + ?Sized>(
    cpdag: &Cpdag,
    measure: &M,
    config: &GesConfig,
) -> Result<Step, SearchError> {
    config.validate()?;
    bes_step_cached(cpdag, measure, config, &mut ScoreCache::new(measure.is_symmetric()))
}

/// Full search from the empty graph over the measure's variables: forward
/// steps until none applies, then backward steps until none applies.
pub fn run_ges<M: ConditionalDependence + ?Sized>(
    measure: &M,
    config: &GesConfig,
) -> Result<(Cpdag, GesTrace), SearchError> {
    config.validate()?;
    let n = measure.num_vars();
    if n < 2 {
        return Err(SearchError::InvalidConfig(format!("need at least 2 variables, got {n}")));
    }
    let mut cpdag = Pdag::new(n)?;
    let mut cache = ScoreCache::new(measure.is_symmetric());
    let mut trace = GesTrace::default();
    for phase in [Phase::Forward, Phase::Backward] {
        loop {
            let step = match phase {
                Phase::Forward => fes_step_cached(&cpdag, measure, config, &mut cache)?,
                Phase::Backward => bes_step_cached(&cpdag, measure, config, &mut cache)?,
            };
            let Some((operator, score)) = step.applied else {
                break;
            };
            cpdag = step.cpdag;
            trace.steps.push(TraceStep {
                phase,
                operator,
                score,
                edge_count: cpdag.edge_count(),
            });
        }
    }
    trace.evaluations = cache.len();
    trace.cache_hits = cache.hits();
    Ok((cpdag, trace))
}

#[cfg(test)]
mod tests;
