//! End-to-end runs shared by the CLI and the acceptance tests: the oracle
//! recovery check, measure selection for discovery, and benchmark cells.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::io::{default_names, GraphDocument};
use crate::graph::{dag_to_cpdag, enumerate_dags, Cpdag, Dag, GraphError};
use crate::measures::{MeasureError, OracleMeasure, PartialCorrelation, RcdMeasure};
use crate::metrics::{f1_cpdag, EvalReport, MetricsError};
use crate::ncd::{self, DiscoveryError, NcdConfig};
use crate::rng::derive_seed;
use crate::search::{run_ges, GesConfig, GesTrace, SearchError};
use crate::synth::{sample_er_dag, Model, ScmSpec, SynthError};
use crate::Dataset;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Discovery(#[from] DiscoveryError),
}

// ---------------------------------------------------------------------------
// Oracle check

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleCheckOptions {
    /// Every DAG with at most this many nodes is checked.
    pub exhaustive_max_nodes: usize,
    pub random_trials: usize,
    pub random_nodes: usize,
    pub degree: f64,
    pub tau: f64,
    pub seed: u64,
}

impl Default for OracleCheckOptions {
    fn default() -> Self {
        OracleCheckOptions {
            exhaustive_max_nodes: 5,
            random_trials: 200,
            random_nodes: 8,
            degree: 2.0,
            tau: 0.5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleFailure {
    pub truth: GraphDocument,
    pub estimate: Option<GraphDocument>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheckReport {
    pub options: OracleCheckOptions,
    /// DAG count per node count in the exhaustive part, starting at 1 node.
    pub exhaustive_counts: Vec<usize>,
    pub checked: usize,
    pub recovered: usize,
    pub failures: Vec<OracleFailure>,
}

impl OracleCheckReport {
    pub fn fraction(&self) -> f64 {
        if self.checked == 0 {
            1.0
        } else {
            self.recovered as f64 / self.checked as f64
        }
    }

    pub fn passed(&self) -> bool {
        self.recovered == self.checked
    }
}

/// Searches with the d-separation oracle of `truth`. A single node is
/// recovered by definition.
pub fn oracle_recover(truth: &Dag, tau: f64) -> Result<Cpdag, ExperimentError> {
    if truth.node_count() < 2 {
        return Ok(dag_to_cpdag(truth));
    }
    let measure = OracleMeasure::new(truth.clone());
    Ok(run_ges(&measure, &GesConfig::new(tau))?.0)
}

fn check_one(truth: &Dag, tau: f64) -> Option<OracleFailure> {
    let names = default_names(truth.node_count());
    let doc = GraphDocument::from_dag(truth, &names);
    match oracle_recover(truth, tau) {
        Ok(est) if est == dag_to_cpdag(truth) => None,
        Ok(est) => Some(OracleFailure {
            truth: doc,
            estimate: Some(GraphDocument::from_pdag(&est, &names)),
            error: None,
        }),
        Err(e) => Some(OracleFailure {
            truth: doc,
            estimate: None,
            error: Some(e.to_string()),
        }),
    }
}

pub fn oracle_check(options: &OracleCheckOptions) -> Result<OracleCheckReport, ExperimentError> {
    if options.exhaustive_max_nodes > 5 {
        return Err(ExperimentError::InvalidArgument(format!(
            "exhaustive enumeration is limited to 5 nodes, got {}",
            options.exhaustive_max_nodes
        )));
    }
    if options.random_trials > 0 && !(2..=8).contains(&options.random_nodes) {
        return Err(ExperimentError::InvalidArgument(format!(
            "random trials need 2 to 8 nodes, got {}",
            options.random_nodes
        )));
    }
    if !(options.tau > 0.0 && options.tau < 1.0) {
        return Err(ExperimentError::InvalidArgument(format!(
            "tau must lie in (0, 1), got {}",
            options.tau
        )));
    }
    let mut truths = Vec::new();
    let mut exhaustive_counts = Vec::new();
    for n in 1..=options.exhaustive_max_nodes {
        let dags = enumerate_dags(n);
        exhaustive_counts.push(dags.len());
        truths.extend(dags);
    }
    let degree = options.degree.min(options.random_nodes.saturating_sub(1) as f64);
    for t in 0..options.random_trials {
        truths.push(sample_er_dag(
            options.random_nodes,
            degree,
            derive_seed(options.seed, &[t as u64]),
        )?);
    }
    let failures: Vec<OracleFailure> = truths
        .par_iter()
        .filter_map(|dag| check_one(dag, options.tau))
        .collect();
    Ok(OracleCheckReport {
        options: *options,
        exhaustive_counts,
        checked: truths.len(),
        recovered: truths.len() - failures.len(),
        failures,
    })
}

// ---------------------------------------------------------------------------
// Discovery with a selected measure

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureKind {
    Ncd,
    Rcd,
    Pcorr,
    Oracle,
}

impl MeasureKind {
    pub fn name(self) -> &'static str {
        match self {
            MeasureKind::Ncd => "ncd",
            MeasureKind::Rcd => "rcd",
            MeasureKind::Pcorr => "pcorr",
            MeasureKind::Oracle => "oracle",
        }
    }

    /// Threshold used when none is given.
    pub fn default_tau(self) -> f64 {
        match self {
            MeasureKind::Ncd => NcdConfig::default().tau,
            MeasureKind::Rcd => 0.05,
            MeasureKind::Pcorr => 0.01,
            MeasureKind::Oracle => 0.5,
        }
    }
}

impl std::fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for MeasureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ncd" => Ok(MeasureKind::Ncd),
            "rcd" => Ok(MeasureKind::Rcd),
            "pcorr" => Ok(MeasureKind::Pcorr),
            "oracle" => Ok(MeasureKind::Oracle),
            other => Err(format!("unknown measure `{other}` (expected ncd, rcd, pcorr or oracle)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscoverOptions {
    pub measure: MeasureKind,
    pub tau: f64,
    pub seed: u64,
    pub max_aux_size: Option<usize>,
    /// Used by the NCD measure only; its `tau` and `seed` are overridden.
    pub ncd: NcdConfig,
}

impl DiscoverOptions {
    pub fn new(measure: MeasureKind) -> Self {
        DiscoverOptions {
            measure,
            tau: measure.default_tau(),
            seed: 0,
            max_aux_size: None,
            ncd: NcdConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub seed: u64,
    /// NaN (serialized as null) when only one restart ran.
    pub global_score: Option<f64>,
    pub edges: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveryOutcome {
    pub cpdag: Cpdag,
    pub trace: GesTrace,
    /// One entry per NCD restart; empty for the other measures.
    pub restarts: Vec<RestartSummary>,
    pub best_restart: Option<usize>,
}

/// Runs the search with the selected measure. The oracle measure needs
/// the true DAG.
pub fn discover(data: &Dataset, truth: Option<&Dag>, options: &DiscoverOptions) -> Result<DiscoveryOutcome, ExperimentError> {
    let ges = GesConfig {
        tau: options.tau,
        max_aux_size: options.max_aux_size,
        seed: options.seed,
    };
    let plain = |(cpdag, trace): (Cpdag, GesTrace)| DiscoveryOutcome {
        cpdag,
        trace,
        restarts: Vec::new(),
        best_restart: None,
    };
    match options.measure {
        MeasureKind::Ncd => {
            let config = NcdConfig {
                tau: options.tau,
                seed: options.seed,
                ..options.ncd
            };
            let found = ncd::discover(data, &config, options.max_aux_size)?;
            let restarts = found
                .restarts
                .iter()
                .map(|r| RestartSummary {
                    seed: r.seed,
                    global_score: r.global_score.is_finite().then_some(r.global_score),
                    edges: r.cpdag.edge_count(),
                    evaluations: r.trace.evaluations,
                })
                .collect();
            Ok(DiscoveryOutcome {
                cpdag: found.cpdag().clone(),
                trace: found.trace().clone(),
                restarts,
                best_restart: Some(found.best),
            })
        }
        MeasureKind::Rcd => Ok(plain(run_ges(&RcdMeasure::new(data, options.seed), &ges)?)),
        MeasureKind::Pcorr => Ok(plain(run_ges(&PartialCorrelation::new(data), &ges)?)),
        MeasureKind::Oracle => {
            let truth = truth.ok_or_else(|| ExperimentError::InvalidArgument("the oracle measure needs the true graph".into()))?;
            if truth.node_count() != data.num_vars() {
                return Err(ExperimentError::InvalidArgument(format!(
                    "true graph has {} nodes but the dataset has {} variables",
                    truth.node_count(),
                    data.num_vars()
                )));
            }
            Ok(plain(run_ges(&OracleMeasure::new(truth.clone()), &ges)?))
        }
    }
}

// ---------------------------------------------------------------------------
// Benchmark cells

/// One row of a benchmark table: a data setting, a measure and a seed list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub model: Model,
    pub nodes: usize,
    pub degree: f64,
    pub samples: usize,
    pub measure: MeasureKind,
    #[serde(default)]
    pub tau: Option<f64>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub max_aux_size: Option<usize>,
    #[serde(default)]
    pub ncd: Option<NcdConfig>,
}

impl BenchCell {
    pub fn label(&self) -> String {
        format!(
            "{}-d{}-deg{}-n{}-{}",
            self.model, self.nodes, self.degree, self.samples, self.measure
        )
    }

    pub fn discover_options(&self, seed: u64) -> DiscoverOptions {
        let mut options = DiscoverOptions::new(self.measure);
        options.seed = seed;
        options.max_aux_size = self.max_aux_size;
        if let Some(ncd) = self.ncd {
            options.ncd = ncd;
            options.tau = ncd.tau;
        }
        if let Some(tau) = self.tau {
            options.tau = tau;
        }
        options
    }

    fn validate(&self) -> Result<(), ExperimentError> {
        if self.seeds.is_empty() {
            return Err(ExperimentError::InvalidArgument(format!("{}: empty seed list", self.label())));
        }
        let mut seen = self.seeds.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.seeds.len() {
            return Err(ExperimentError::InvalidArgument(format!("{}: seeds must be distinct", self.label())));
        }
        Ok(())
    }
}

/// Truth, data, estimate and metrics for one seed of a cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub cell: String,
    pub seed: u64,
    #[serde(flatten)]
    pub report: EvalReport,
    /// Wall-clock seconds spent in discovery.
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedFailure {
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Mean and sample standard deviation (n - 1 denominator; 0 for one value).
    pub fn of(values: &[f64]) -> Option<MeanStd> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(MeanStd { mean, std })
    }
}

impl std::fmt::Display for MeanStd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let p = f.precision().unwrap_or(2);
        write!(f, "{:.p$}±{:.p$}", self.mean, self.std)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: BenchCell,
    pub label: String,
    pub shd: Option<MeanStd>,
    pub f1: Option<MeanStd>,
    pub seconds: Option<MeanStd>,
    pub seeds: Vec<SeedReport>,
    pub failures: Vec<SeedFailure>,
}

impl CellSummary {
    pub fn from_reports(cell: BenchCell, seeds: Vec<SeedReport>, failures: Vec<SeedFailure>) -> Self {
        let collect = |f: fn(&SeedReport) -> f64| MeanStd::of(&seeds.iter().map(f).collect::<Vec<_>>());
        CellSummary {
            label: cell.label(),
            shd: collect(|r| r.report.shd as f64),
            f1: collect(|r| r.report.f1),
            seconds: collect(|r| r.seconds),
            cell,
            seeds,
            failures,
        }
    }
}

/// A random DAG and a dataset drawn from it. The two come from
/// independent streams derived from `seed`.
pub fn simulate(model: Model, nodes: usize, degree: f64, samples: usize, seed: u64) -> Result<(Dag, Dataset), ExperimentError> {
    let dag = sample_er_dag(nodes, degree, derive_seed(seed, &[0]))?;
    let data = ScmSpec {
        model,
        dag: dag.clone(),
        n: samples,
        seed: derive_seed(seed, &[1]),
    }
    .generate()?;
    Ok((dag, data))
}

/// Simulates, discovers and evaluates one seed of a cell.
pub fn run_seed(cell: &BenchCell, seed: u64) -> Result<SeedReport, ExperimentError> {
    let (dag, data) = simulate(cell.model, cell.nodes, cell.degree, cell.samples, seed)?;
    let start = Instant::now();
    let found = discover(&data, Some(&dag), &cell.discover_options(seed))?;
    let seconds = start.elapsed().as_secs_f64();
    Ok(SeedReport {
        cell: cell.label(),
        seed,
        report: f1_cpdag(&found.cpdag, &dag_to_cpdag(&dag))?,
        seconds,
    })
}

/// Runs every seed of the cell. A failing seed is recorded and the rest
/// continue.
pub fn run_cell(cell: &BenchCell) -> Result<CellSummary, ExperimentError> {
    cell.validate()?;
    let results: Vec<(u64, Result<SeedReport, ExperimentError>)> =
        cell.seeds.par_iter().map(|&s| (s, run_seed(cell, s))).collect();
    let mut seeds = Vec::new();
    let mut failures = Vec::new();
    for (seed, r) in results {
        match r {
            Ok(r) => seeds.push(r),
            Err(e) => failures.push(SeedFailure {
                seed,
                error: e.to_string(),
            }),
        }
    }
    Ok(CellSummary::from_reports(cell.clone(), seeds, failures))
}
