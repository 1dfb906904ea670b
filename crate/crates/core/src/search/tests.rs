use std::sync::atomic::{AtomicUsize, Ordering};

use super::*;
use crate::graph::{dag_to_cpdag, enumerate_dags, pdag_to_dag, Dag};
use crate::measures::{MeasureError, OracleMeasure};
use crate::synth::sample_er_dag;

fn set(v: &[usize]) -> NodeSet {
    v.iter().collect()
}

struct Constant {
    n: usize,
    value: f64,
}

impl ConditionalDependence for Constant {
    fn num_vars(&self) -> usize {
        self.n
    }
    fn score(&self, _: usize, _: usize, _: NodeSet) -> Result<f64, MeasureError> {
        Ok(self.value)
    }
}

struct Counting<M> {
    inner: M,
    calls: AtomicUsize,
}

impl<M: ConditionalDependence> ConditionalDependence for Counting<M> {
    fn num_vars(&self) -> usize {
        self.inner.num_vars()
    }
    fn score(&self, x: usize, y: usize, z: NodeSet) -> Result<f64, MeasureError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.score(x, y, z)
    }
    fn is_symmetric(&self) -> bool {
        self.inner.is_symmetric()
    }
}

struct Failing;

impl ConditionalDependence for Failing {
    fn num_vars(&self) -> usize {
        3
    }
    fn score(&self, _: usize, _: usize, _: NodeSet) -> Result<f64, MeasureError> {
        Err(MeasureError::DegenerateDenominator)
    }
}

/// Definitional enumeration: every (x, y, aux) triple the operator
/// definitions admit, checked with the graph-layer validity tests.
fn oracle_inserts(g: &Cpdag) -> Vec<EdgeOperator> {
    let n = g.node_count();
    let mut out = Vec::new();
    for x in 0..n {
        for y in 0..n {
            if x == y || g.is_adjacent(x, y) {
                continue;
            }
            for bits in 0u64..(1 << n) {
                let t = NodeSet::from_bits(bits);
                let ok_members = t
                    .iter()
                    .all(|v| g.has_undirected(v, y) && !g.is_adjacent(v, x));
                if ok_members && validity_insert(g, x, y, t) {
                    out.push(EdgeOperator::insert(x, y, t));
                }
            }
        }
    }
    out
}

fn oracle_deletes(g: &Cpdag) -> Vec<EdgeOperator> {
    let n = g.node_count();
    let mut out = Vec::new();
    for x in 0..n {
        for y in 0..n {
            if x == y || !(g.has_directed(x, y) || g.has_undirected(x, y)) {
                continue;
            }
            for bits in 0u64..(1 << n) {
                let h = NodeSet::from_bits(bits);
                let ok_members = h
                    .iter()
                    .all(|v| g.has_undirected(v, y) && g.is_adjacent(v, x));
                if ok_members && validity_delete(g, x, y, h) {
                    out.push(EdgeOperator::delete(x, y, h));
                }
            }
        }
    }
    out
}

#[test]
fn empty_graph_has_six_unconditioned_inserts() {
    let g = Pdag::new(3).unwrap();
    let ops = enumerate_inserts(&g, None);
    assert_eq!(ops.len(), 6);
    assert!(ops.iter().all(|op| op.aux.is_empty()));
}

#[test]
fn complete_undirected_graph_has_no_inserts() {
    let g = Pdag::from_edges(3, [], [(0, 1), (1, 2), (0, 2)]).unwrap();
    assert!(enumerate_inserts(&g, None).is_empty());
}

#[test]
fn inserts_toward_a_node_with_an_undirected_neighbor() {
    // 0--1 with 2 isolated
    let g = Pdag::from_edges(3, [], [(0, 1)]).unwrap();
    let ops = enumerate_inserts(&g, None);
    assert!(ops.contains(&EdgeOperator::insert(2, 1, NodeSet::EMPTY)));
    assert!(ops.contains(&EdgeOperator::insert(2, 1, set(&[0]))));
    assert_eq!(enumerate_inserts(&g, Some(0)).iter().filter(|o| !o.aux.is_empty()).count(), 0);
}

#[test]
fn delete_enumeration_examples() {
    assert!(enumerate_deletes(&Pdag::new(3).unwrap(), None).is_empty());
    let single = Pdag::from_edges(2, [(0, 1)], []).unwrap();
    assert_eq!(enumerate_deletes(&single, None), vec![EdgeOperator::delete(0, 1, NodeSet::EMPTY)]);
    let tri = Pdag::from_edges(3, [], [(0, 1), (1, 2), (0, 2)]).unwrap();
    let mut got = enumerate_deletes(&tri, None);
    let mut want = oracle_deletes(&tri);
    got.sort_by_key(|o| (o.x, o.y, o.aux));
    want.sort_by_key(|o| (o.x, o.y, o.aux));
    assert_eq!(got, want);
    // each ordered pair with h = ∅ and h = {third node}
    assert_eq!(got.len(), 12);
}

#[test]
fn enumeration_matches_definition_on_all_small_cpdags() {
    for n in 1..=4 {
        let mut seen = std::collections::HashSet::new();
        for dag in enumerate_dags(n) {
            let g = dag_to_cpdag(&dag);
            if !seen.insert(g.clone()) {
                continue;
            }
            let mut ins = enumerate_inserts(&g, None);
            let mut want = oracle_inserts(&g);
            ins.sort_by_key(|o| (o.x, o.y, o.aux));
            want.sort_by_key(|o| (o.x, o.y, o.aux));
            assert_eq!(ins, want, "{g:?}");
            let mut del = enumerate_deletes(&g, None);
            let mut want = oracle_deletes(&g);
            del.sort_by_key(|o| (o.x, o.y, o.aux));
            want.sort_by_key(|o| (o.x, o.y, o.aux));
            assert_eq!(del, want, "{g:?}");
        }
    }
}

#[test]
fn conditioning_set_examples() {
    let empty = Pdag::new(3).unwrap();
    assert_eq!(conditioning_set(&empty, &EdgeOperator::insert(0, 1, NodeSet::EMPTY)), NodeSet::EMPTY);
    // 2 → 1, 1--3, Insert(0, 1, {3})
    let g = Pdag::from_edges(4, [(2, 1)], [(1, 3)]).unwrap();
    assert_eq!(conditioning_set(&g, &EdgeOperator::insert(0, 1, set(&[3]))), set(&[2, 3]));
    // 0 → 1 ← 2, Delete(0, 1, ∅)
    let g = Pdag::from_edges(3, [(0, 1), (2, 1)], []).unwrap();
    assert_eq!(conditioning_set(&g, &EdgeOperator::delete(0, 1, NodeSet::EMPTY)), set(&[2]));
}

#[test]
fn conditioning_set_equals_parents_in_the_resulting_dag() {
    // the operator's result admits an extension where y's parents are the set
    for n in 3..=4 {
        let mut seen = std::collections::HashSet::new();
        for dag in enumerate_dags(n) {
            let g = dag_to_cpdag(&dag);
            if !seen.insert(g.clone()) {
                continue;
            }
            for op in enumerate_inserts(&g, None).into_iter().chain(enumerate_deletes(&g, None)) {
                let z = conditioning_set(&g, &op);
                let mut p = g.clone();
                match op.kind {
                    OperatorKind::Insert => {
                        p.add_directed(op.x, op.y).unwrap();
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
                // orient the remaining undirected edges at y consistently with z
                for w in p.undirected_neighbors(op.y) {
                    if z.contains(w) {
                        p.orient(w, op.y);
                    } else {
                        p.orient(op.y, w);
                    }
                }
                let ext = pdag_to_dag(&p).expect("operator result is extendable");
                let pa = ext.parents(op.y);
                let expected = match op.kind {
                    OperatorKind::Insert => pa,
                    OperatorKind::Delete => pa,
                };
                let z_with_x = match op.kind {
                    OperatorKind::Insert => z.with(op.x),
                    OperatorKind::Delete => z,
                };
                assert_eq!(expected, z_with_x, "{g:?} {op}");
            }
        }
    }
}

#[test]
fn fes_examples() {
    let cfg = GesConfig::new(0.5);
    let g = Pdag::new(3).unwrap();
    let zero = Constant { n: 3, value: 0.0 };
    let step = fes_step(&g, &zero, &cfg).unwrap();
    assert!(!step.applied());
    assert_eq!(step.cpdag, g);

    let one = Constant { n: 2, value: 1.0 };
    let step = fes_step(&Pdag::new(2).unwrap(), &one, &cfg).unwrap();
    assert!(step.applied());
    assert!(step.cpdag.has_undirected(0, 1));

    // collider 0 → 1 ← 2: the first insert never joins 0 and 2
    let truth = Dag::from_edges(3, [(0, 1), (2, 1)]).unwrap();
    let oracle = OracleMeasure::new(truth);
    let step = fes_step(&g, &oracle, &cfg).unwrap();
    let (op, score) = step.applied.unwrap();
    assert_eq!(score, 1.0);
    assert!(!(op.x.min(op.y) == 0 && op.x.max(op.y) == 2));
}

#[test]
fn bes_examples() {
    let cfg = GesConfig::new(0.5);
    let one_edge = Pdag::from_edges(2, [], [(0, 1)]).unwrap();
    let step = bes_step(&one_edge, &Constant { n: 2, value: 1.0 }, &cfg).unwrap();
    assert!(!step.applied());
    let step = bes_step(&one_edge, &Constant { n: 2, value: 0.0 }, &cfg).unwrap();
    assert!(step.applied());
    assert_eq!(step.cpdag.edge_count(), 0);

    // chain 0 → 1 → 2, start from the complete graph
    let truth = Dag::from_edges(3, [(0, 1), (1, 2)]).unwrap();
    let full = Pdag::from_edges(3, [], [(0, 1), (1, 2), (0, 2)]).unwrap();
    let step = bes_step(&full, &OracleMeasure::new(truth.clone()), &cfg).unwrap();
    let (op, score) = step.applied.unwrap();
    assert_eq!(score, 0.0);
    assert_eq!((op.x.min(op.y), op.x.max(op.y)), (0, 2));
    assert_eq!(step.cpdag, dag_to_cpdag(&truth));
}

#[test]
fn measure_failures_carry_operator_context() {
    let err = fes_step(&Pdag::new(3).unwrap(), &Failing, &GesConfig::new(0.5)).unwrap_err();
    match err {
        SearchError::Measure { operator, conditioning, source } => {
            assert_eq!(operator, EdgeOperator::insert(0, 1, NodeSet::EMPTY));
            assert_eq!(conditioning, NodeSet::EMPTY);
            assert_eq!(source, MeasureError::DegenerateDenominator);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn non_positive_tau_is_rejected() {
    let m = Constant { n: 2, value: 1.0 };
    for tau in [0.0, -1.0, f64::NAN] {
        assert!(matches!(run_ges(&m, &GesConfig::new(tau)), Err(SearchError::InvalidConfig(_))));
    }
}

#[test]
fn oracle_search_recovers_every_small_dag() {
    let cfg = GesConfig::new(0.5);
    for n in 2..=5 {
        for truth in enumerate_dags(n) {
            let (est, _) = run_ges(&OracleMeasure::new(truth.clone()), &cfg).unwrap();
            assert_eq!(est, dag_to_cpdag(&truth), "{truth:?}");
        }
    }
}

#[test]
fn oracle_search_recovers_random_eight_node_dags() {
    for seed in 0..200 {
        let truth = sample_er_dag(8, 2.0, seed).unwrap();
        for tau in [0.5, 0.05, 0.95] {
            let (est, _) = run_ges(&OracleMeasure::new(truth.clone()), &GesConfig::new(tau)).unwrap();
            assert_eq!(est, dag_to_cpdag(&truth), "seed {seed} {truth:?}");
        }
    }
}

#[test]
fn trace_is_monotone_and_every_step_is_a_cpdag() {
    for seed in 0..30 {
        let truth = sample_er_dag(7, 2.5, seed).unwrap();
        let oracle = OracleMeasure::new(truth);
        let cfg = GesConfig::new(0.5);
        let mut g = Pdag::new(7).unwrap();
        let mut cache = ScoreCache::new(true);
        for backward in [false, true] {
            loop {
                let before = g.edge_count();
                let step = if backward {
                    bes_step_cached(&g, &oracle, &cfg, &mut cache).unwrap()
                } else {
                    fes_step_cached(&g, &oracle, &cfg, &mut cache).unwrap()
                };
                if !step.applied() {
                    break;
                }
                let after = step.cpdag.edge_count();
                assert_eq!(after, if backward { before - 1 } else { before + 1 });
                let again = dag_to_cpdag(&pdag_to_dag(&step.cpdag).unwrap());
                assert_eq!(again, step.cpdag);
                g = step.cpdag;
            }
        }
        let (_, trace) = run_ges(&oracle, &cfg).unwrap();
        let mut last = 0;
        let mut phase = Phase::Forward;
        for s in &trace.steps {
            if s.phase != phase {
                phase = s.phase;
            } else if phase == Phase::Forward {
                assert!(s.edge_count >= last);
            } else {
                assert!(s.edge_count <= last);
            }
            last = s.edge_count;
        }
    }
}

#[test]
fn cache_avoids_repeated_evaluations() {
    let truth = sample_er_dag(6, 2.0, 4).unwrap();
    let counting = Counting {
        inner: OracleMeasure::new(truth),
        calls: AtomicUsize::new(0),
    };
    let (_, trace) = run_ges(&counting, &GesConfig::new(0.5)).unwrap();
    assert_eq!(counting.calls.load(Ordering::Relaxed), trace.evaluations);
    assert!(trace.cache_hits > 0);
}

#[test]
fn symmetric_cache_shares_reversed_queries() {
    let mut sym = ScoreCache::new(true);
    let mut asym = ScoreCache::new(false);
    let g = Pdag::new(4).unwrap();
    let ops = enumerate_inserts(&g, None);
    let m = Constant { n: 4, value: 0.3 };
    sym.score_all(&g, &ops, &m).unwrap();
    asym.score_all(&g, &ops, &m).unwrap();
    assert_eq!(sym.len(), 6);
    assert_eq!(asym.len(), 12);
}

#[test]
fn search_is_deterministic() {
    let truth = sample_er_dag(8, 2.0, 99).unwrap();
    let oracle = OracleMeasure::new(truth);
    let a = run_ges(&oracle, &GesConfig::new(0.5)).unwrap();
    let b = run_ges(&oracle, &GesConfig::new(0.5)).unwrap();
    assert_eq!(a, b);
}
