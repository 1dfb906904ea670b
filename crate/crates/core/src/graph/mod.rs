//! Graph algebra for DAGs and (completed) partially directed acyclic graphs.
//!
//! Nodes are dense indices `0..n` with `n <= 64`; variable names live in the
//! dataset metadata, not here.

mod dag;
pub mod io;
mod nodeset;
mod pdag;

pub use dag::Dag;
pub use nodeset::{NodeSet, NodeSetIter, MAX_NODES};
pub use pdag::{Cpdag, Pdag};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("node count {0} is outside 1..={max}", max = MAX_NODES)]
    NodeCount(usize),
    #[error("node {node} is out of range for a graph with {node_count} nodes")]
    NodeOutOfRange { node: usize, node_count: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("nodes {0} and {1} are already adjacent")]
    DuplicateEdge(usize, usize),
    #[error("edge {0} -> {1} would create a directed cycle")]
    Cycle(usize, usize),
    #[error("the partially directed graph has no consistent DAG extension")]
    NoConsistentExtension,
    #[error("expected a DAG but the graph has undirected edge {0} -- {1}")]
    UndirectedEdge(usize, usize),
}

/// Completed PDAG of the Markov equivalence class of `dag`.
///
/// Uses the compelled-edge labeling over a total ordering of the edges: an
/// edge stays directed iff it has the same orientation in every DAG with the
/// same skeleton and v-structures.
pub fn dag_to_cpdag(dag: &Dag) -> Cpdag {
    let n = dag.node_count();
    let topo = dag.topological_order();
    let mut pos = vec![0usize; n];
    for (i, &v) in topo.iter().enumerate() {
        pos[v] = i;
    }

    // Children in increasing topological position; parents of each child in
    // decreasing position.
    let mut ordered = Vec::with_capacity(dag.edge_count());
    for &y in &topo {
        let mut pa = dag.parents(y).to_vec();
        pa.sort_by_key(|&p| std::cmp::Reverse(pos[p]));
        ordered.extend(pa.into_iter().map(|x| (x, y)));
    }

    #[derive(Clone, Copy, PartialEq)]
    enum Label {
        Unknown,
        Compelled,
        Reversible,
    }
    let mut label = vec![Label::Unknown; n * n];
    let idx = |a: usize, b: usize| a * n + b;

    for &(x, y) in &ordered {
        if label[idx(x, y)] != Label::Unknown {
            continue;
        }
        let pa_y = dag.parents(y);
        let mut finished = false;
        for w in dag.parents(x) {
            if label[idx(w, x)] != Label::Compelled {
                continue;
            }
            if !pa_y.contains(w) {
                for p in pa_y {
                    label[idx(p, y)] = Label::Compelled;
                }
                finished = true;
                break;
            }
            label[idx(w, y)] = Label::Compelled;
        }
        if finished {
            continue;
        }
        let pa_x = dag.parents(x);
        let compelled = pa_y.iter().any(|z| z != x && !pa_x.contains(z));
        let fill = if compelled {
            Label::Compelled
        } else {
            Label::Reversible
        };
        label[idx(x, y)] = fill;
        for p in pa_y {
            if label[idx(p, y)] == Label::Unknown {
                label[idx(p, y)] = fill;
            }
        }
    }

    let mut out = Pdag::empty(n);
    for (x, y) in dag.edges() {
        match label[idx(x, y)] {
            Label::Compelled => out.add_directed(x, y),
            _ => out.add_undirected(x, y),
        }
        .expect("edges of a DAG are distinct pairs");
    }
    out
}

/// A consistent DAG extension of a partially directed graph.
///
/// Keeps every directed edge, orients undirected ones without creating new
/// v-structures or cycles. Repeatedly removes the lowest-index node that is a
/// sink and whose undirected neighbors are adjacent to all of its other
/// neighbors, orienting its undirected edges inward.
pub fn pdag_to_dag(pdag: &Pdag) -> Result<Dag, GraphError> {
    let n = pdag.node_count();
    let mut remaining = NodeSet::full(n);
    let mut oriented: Vec<(usize, usize)> = Vec::new();

    while !remaining.is_empty() {
        let sink = remaining.iter().find(|&x| {
            if !pdag.children(x).intersection(remaining).is_empty() {
                return false;
            }
            let adj_x = pdag.adjacents(x).intersection(remaining);
            pdag.undirected_neighbors(x)
                .intersection(remaining)
                .iter()
                .all(|y| adj_x.without(y).is_subset(pdag.adjacents(y)))
        });
        let Some(x) = sink else {
            return Err(GraphError::NoConsistentExtension);
        };
        for y in pdag.undirected_neighbors(x).intersection(remaining) {
            oriented.push((y, x));
        }
        remaining.remove(x);
    }

    let mut dag = Dag::new(n)?;
    for (a, b) in pdag.directed_edges().chain(oriented) {
        dag.add_edge(a, b)
            .map_err(|_| GraphError::NoConsistentExtension)?;
    }
    Ok(dag)
}

/// Re-completes a PDAG: extend to a DAG, then take its equivalence class.
pub fn complete(pdag: &Pdag) -> Result<Cpdag, GraphError> {
    pdag_to_dag(pdag).map(|d| dag_to_cpdag(&d))
}

/// Whether `x` and `y` are d-separated given `z` in `dag`.
///
/// Reachability over (node, direction-of-arrival) states. Expects `x != y`
/// and neither in `z`.
pub fn d_separated(dag: &Dag, x: usize, y: usize, z: NodeSet) -> bool {
    debug_assert!(x != y && !z.contains(x) && !z.contains(y));
    let anc_z = dag.ancestors_of_set(z);
    let n = dag.node_count();
    // visited[v][0]: reached travelling up (from a child); [1]: down (from a parent)
    let mut visited = vec![[false; 2]; n];
    let mut stack = vec![(x, 0usize)];
    while let Some((v, dir)) = stack.pop() {
        if visited[v][dir] {
            continue;
        }
        visited[v][dir] = true;
        let blocked = z.contains(v);
        if v == y && !blocked {
            return false;
        }
        if dir == 0 {
            if !blocked {
                stack.extend(dag.parents(v).iter().map(|p| (p, 0)));
                stack.extend(dag.children(v).iter().map(|c| (c, 1)));
            }
        } else {
            if !blocked {
                stack.extend(dag.children(v).iter().map(|c| (c, 1)));
            }
            if anc_z.contains(v) {
                stack.extend(dag.parents(v).iter().map(|p| (p, 0)));
            }
        }
    }
    true
}

/// `NA_{y,x}`: undirected neighbors of `y` that are adjacent to `x`.
pub fn na_set(cpdag: &Cpdag, y: usize, x: usize) -> NodeSet {
    cpdag
        .undirected_neighbors(y)
        .intersection(cpdag.adjacents(x))
}

/// Whether some semi-directed path from `from` to `to` avoids every node
/// in `blockers`. Undirected edges are walked both ways, directed edges only
/// parent to child.
pub fn has_unblocked_semi_directed_path(
    pdag: &Pdag,
    from: usize,
    to: usize,
    blockers: NodeSet,
) -> bool {
    let mut seen = NodeSet::singleton(from);
    let mut stack = vec![from];
    while let Some(v) = stack.pop() {
        let next = pdag
            .children(v)
            .union(pdag.undirected_neighbors(v))
            .difference(seen);
        for w in next {
            if w == to {
                return true;
            }
            seen.insert(w);
            if !blockers.contains(w) {
                stack.push(w);
            }
        }
    }
    false
}

/// Validity of `Insert(x, y, t)` on a CPDAG: `NA_{y,x} ∪ t` is a clique and
/// every semi-directed path from `y` to `x` passes through it.
pub fn validity_insert(cpdag: &Cpdag, x: usize, y: usize, t: NodeSet) -> bool {
    let s = na_set(cpdag, y, x).union(t);
    cpdag.is_clique(s) && !has_unblocked_semi_directed_path(cpdag, y, x, s)
}

/// Validity of `Delete(x, y, h)` on a CPDAG: `NA_{y,x} \ h` is a clique.
pub fn validity_delete(cpdag: &Cpdag, x: usize, y: usize, h: NodeSet) -> bool {
    cpdag.is_clique(na_set(cpdag, y, x).difference(h))
}

/// All `j != i` with no directed path `i ⇝ j`.
pub fn non_descendants(dag: &Dag, i: usize) -> NodeSet {
    dag.non_descendants(i)
}

/// Every DAG on `n` nodes, in a fixed order. Practical up to `n = 5`
/// (29 281 graphs).
pub fn enumerate_dags(n: usize) -> Vec<Dag> {
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| ((a + 1)..n).map(move |b| (a, b)))
        .collect();
    let total = 3usize.pow(pairs.len() as u32);
    let mut out = Vec::new();
    'outer: for code in 0..total {
        let mut c = code;
        let mut dag = Dag::new(n).expect("n within range");
        for &(a, b) in &pairs {
            let state = c % 3;
            c /= 3;
            let r = match state {
                0 => Ok(()),
                1 => dag.add_edge(a, b),
                _ => dag.add_edge(b, a),
            };
            if r.is_err() {
                continue 'outer;
            }
        }
        out.push(dag);
    }
    out
}
