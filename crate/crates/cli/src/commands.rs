use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use ncdges::experiments::{
    discover, oracle_check, run_cell, simulate as simulate_instance, BenchCell, CellSummary, DiscoverOptions,
    MeanStd, OracleCheckOptions, RestartSummary, SeedFailure,
};
use ncdges::graph::io::GraphDocument;
use ncdges::graph::{dag_to_cpdag, Cpdag, Dag};
use ncdges::io::write_atomic;
use ncdges::metrics::{f1_cpdag, EvalReport};
use ncdges::search::GesTrace;
use ncdges::synth::Model;
use ncdges::Dataset;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{default_tau, RunConfig};
use crate::{BenchArgs, Cli, Command, DiscoverArgs, EvaluateArgs, OracleCheckArgs, SimulateArgs};

pub fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let config = RunConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Simulate(args) => simulate(&config, args),
        Command::Discover(args) => discover_cmd(&config, args),
        Command::Evaluate(args) => evaluate(args),
        Command::Bench(args) => bench(&config, args),
        Command::OracleCheck(args) => oracle(&config, args),
    }
}

fn required<T>(value: Option<T>, flag: &str) -> anyhow::Result<T> {
    value.with_context(|| format!("missing --{flag} (give it as a flag or in the config document)"))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())?;
    Ok(())
}

fn simulate(config: &RunConfig, args: SimulateArgs) -> anyhow::Result<ExitCode> {
    let s = &config.simulate;
    let model = args.model.or(s.model).unwrap_or(Model::PnlGp);
    let nodes = required(args.nodes.or(s.nodes), "nodes")?;
    let degree = args.degree.or(s.degree).unwrap_or(2.0);
    let samples = required(args.samples.or(s.samples), "samples")?;
    let seed = args.seed.or(s.seed).unwrap_or(0);
    let out = required(args.out.or(s.out.clone()), "out")?;
    let graph_out = required(args.graph_out.or(s.graph_out.clone()), "graph-out")?;

    let (dag, data) = simulate_instance(model, nodes, degree, samples, seed)?;
    data.write_csv(&out)?;
    GraphDocument::from_dag(&dag, &data.names()).write(&graph_out)?;
    println!(
        "wrote {samples}x{nodes} {model} dataset to {} and its DAG ({} edges) to {}",
        out.display(),
        dag.edge_count(),
        graph_out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn read_graph(path: &Path) -> anyhow::Result<GraphDocument> {
    Ok(GraphDocument::read(path)?)
}

/// A fully directed document is read as a DAG and completed; anything else
/// is taken as a CPDAG.
fn truth_cpdag(doc: &GraphDocument) -> anyhow::Result<Cpdag> {
    if doc.edges.iter().all(|e| e.directed) {
        Ok(dag_to_cpdag(&doc.to_dag()?))
    } else {
        Ok(doc.to_pdag()?)
    }
}

fn truth_dag(path: &Path) -> anyhow::Result<Dag> {
    read_graph(path)?
        .to_dag()
        .with_context(|| format!("{} must be a DAG", path.display()))
}

#[derive(Serialize)]
struct TraceDocument<'a> {
    measure: String,
    tau: f64,
    seed: u64,
    trace: &'a GesTrace,
    restarts: &'a [RestartSummary],
    best_restart: Option<usize>,
}

fn discover_cmd(config: &RunConfig, args: DiscoverArgs) -> anyhow::Result<ExitCode> {
    let d = &config.discover;
    let data_path = required(args.data.or(d.data.clone()), "data")?;
    let measure = required(args.measure.or(d.measure), "measure")?;
    let mut ncd = config.ncd_config(args.preset.map(Into::into).or(d.preset));
    if let Some(r) = args.restarts.or(d.restarts) {
        ncd.restarts = r;
    }
    let options = DiscoverOptions {
        measure,
        tau: args.tau.or(d.tau).unwrap_or_else(|| default_tau(measure, &ncd)),
        seed: args.seed.or(d.seed).unwrap_or(ncd.seed),
        max_aux_size: args.max_aux.or(d.max_aux_size),
        ncd,
    };
    let out = required(args.out.or(d.out.clone()), "out")?;
    let trace_out = args.trace_out.or(d.trace_out.clone());

    let data = Dataset::read_csv(&data_path)?;
    let truth = match args.truth.or(d.truth.clone()) {
        Some(p) => Some(truth_dag(&p)?),
        None => None,
    };
    let found = discover(&data, truth.as_ref(), &options)?;
    GraphDocument::from_pdag(&found.cpdag, &data.names()).write(&out)?;
    if let Some(path) = trace_out {
        write_json(
            &path,
            &TraceDocument {
                measure: measure.to_string(),
                tau: options.tau,
                seed: options.seed,
                trace: &found.trace,
                restarts: &found.restarts,
                best_restart: found.best_restart,
            },
        )?;
    }
    println!(
        "{measure} (tau {}): {} edges after {} steps, {} evaluations; wrote {}",
        options.tau,
        found.cpdag.edge_count(),
        found.trace.steps.len(),
        found.trace.evaluations,
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn evaluate(args: EvaluateArgs) -> anyhow::Result<ExitCode> {
    let estimate = read_graph(&args.estimate)?.to_pdag()?;
    let truth = truth_cpdag(&read_graph(&args.truth)?)?;
    let report = f1_cpdag(&estimate, &truth)?;
    if let Some(out) = &args.out {
        write_json(out, &report)?;
    }
    println!("{}", serde_json::to_string(&report)?);
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct SeedRecord<'a> {
    cell: &'a str,
    seed: u64,
    #[serde(flatten)]
    report: EvalReport,
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    cell: &'a BenchCell,
    label: &'a str,
    shd: Option<MeanStd>,
    f1: Option<MeanStd>,
    completed: usize,
    failures: &'a [SeedFailure],
}

#[derive(Serialize)]
struct TimingRow<'a> {
    label: &'a str,
    seconds: Vec<(u64, f64)>,
}

fn bench_cells(config: &RunConfig, args: &BenchArgs) -> anyhow::Result<Vec<BenchCell>> {
    let mut cells = config.bench.cells.clone();
    if cells.is_empty() {
        let measure = required(args.measure, "measure")?;
        cells.push(BenchCell {
            model: args.model.unwrap_or(Model::PnlGp),
            nodes: required(args.nodes, "nodes")?,
            degree: args.degree.unwrap_or(2.0),
            samples: required(args.samples, "samples")?,
            measure,
            tau: args.tau,
            seeds: args.seeds.clone().unwrap_or_else(|| (0..5).collect()),
            max_aux_size: None,
            ncd: config.ncd,
        });
        return Ok(cells);
    }
    for cell in &mut cells {
        cell.model = args.model.unwrap_or(cell.model);
        cell.nodes = args.nodes.unwrap_or(cell.nodes);
        cell.degree = args.degree.unwrap_or(cell.degree);
        cell.samples = args.samples.unwrap_or(cell.samples);
        cell.measure = args.measure.unwrap_or(cell.measure);
        cell.tau = args.tau.or(cell.tau);
        if let Some(seeds) = &args.seeds {
            cell.seeds = seeds.clone();
        }
        cell.ncd = cell.ncd.or(config.ncd);
    }
    Ok(cells)
}

fn cell_file_name(label: &str, seed: u64) -> PathBuf {
    PathBuf::from(format!("{label}-seed{seed}.json"))
}

fn bench(config: &RunConfig, args: BenchArgs) -> anyhow::Result<ExitCode> {
    let cells = bench_cells(config, &args)?;
    let out_dir = args.out_dir.clone().or(config.bench.out_dir.clone());
    if let Some(dir) = &out_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let summaries: Vec<CellSummary> = cells
        .par_iter()
        .map(|cell| {
            run_cell(cell).unwrap_or_else(|e| {
                let failures = cell
                    .seeds
                    .iter()
                    .map(|&seed| SeedFailure {
                        seed,
                        error: e.to_string(),
                    })
                    .collect();
                CellSummary::from_reports(cell.clone(), Vec::new(), failures)
            })
        })
        .collect();

    println!("{:<36} {:>12} {:>12} {:>14} {:>6}", "cell", "SHD", "F1", "seconds", "failed");
    let dash = || "-".to_string();
    for s in &summaries {
        println!(
            "{:<36} {:>12} {:>12} {:>14} {:>6}",
            s.label,
            s.shd.map_or_else(dash, |m| format!("{m:.1}")),
            s.f1.map_or_else(dash, |m| format!("{m:.2}")),
            s.seconds.map_or_else(dash, |m| format!("{m:.1}")),
            s.failures.len()
        );
        for f in &s.failures {
            eprintln!("{} seed {}: {}", s.label, f.seed, f.error);
        }
    }

    if let Some(dir) = &out_dir {
        for s in &summaries {
            for r in &s.seeds {
                let record = SeedRecord {
                    cell: &s.label,
                    seed: r.seed,
                    report: r.report,
                };
                write_json(&dir.join(cell_file_name(&s.label, r.seed)), &record)?;
            }
        }
        let rows: Vec<SummaryRow> = summaries
            .iter()
            .map(|s| SummaryRow {
                cell: &s.cell,
                label: &s.label,
                shd: s.shd,
                f1: s.f1,
                completed: s.seeds.len(),
                failures: &s.failures,
            })
            .collect();
        write_json(&dir.join("summary.json"), &rows)?;
        let timing: Vec<TimingRow> = summaries
            .iter()
            .map(|s| TimingRow {
                label: &s.label,
                seconds: s.seeds.iter().map(|r| (r.seed, r.seconds)).collect(),
            })
            .collect();
        write_json(&dir.join("timing.json"), &timing)?;
    }
    if summaries.iter().any(|s| !s.failures.is_empty()) {
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn oracle(config: &RunConfig, args: OracleCheckArgs) -> anyhow::Result<ExitCode> {
    let c = &config.oracle_check;
    let d = OracleCheckOptions::default();
    let options = OracleCheckOptions {
        exhaustive_max_nodes: args.max_exhaustive.or(c.exhaustive_max_nodes).unwrap_or(d.exhaustive_max_nodes),
        random_trials: args.trials.or(c.random_trials).unwrap_or(d.random_trials),
        random_nodes: args.nodes.or(c.random_nodes).unwrap_or(d.random_nodes),
        degree: args.degree.or(c.degree).unwrap_or(d.degree),
        tau: args.tau.or(c.tau).unwrap_or(d.tau),
        seed: args.seed.or(c.seed).unwrap_or(d.seed),
    };
    let report = oracle_check(&options)?;
    if let Some(out) = args.out.or(c.out.clone()) {
        write_json(&out, &report)?;
    }
    for f in &report.failures {
        eprintln!("not recovered: {}", serde_json::to_string(&f.truth)?);
    }
    println!(
        "exhaustive DAG counts {:?}, {} random {}-node DAGs: {}/{} recovered ({:.1}%)",
        report.exhaustive_counts,
        options.random_trials,
        options.random_nodes,
        report.recovered,
        report.checked,
        100.0 * report.fraction()
    );
    if !report.passed() {
        bail!("{} graphs were not recovered", report.failures.len());
    }
    Ok(ExitCode::SUCCESS)
}
