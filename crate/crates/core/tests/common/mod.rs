//! Independent reference implementations used by the integration tests.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use ncdges::graph::{dag_to_cpdag, Cpdag, Dag, Pdag};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random DAG: shuffled order, each forward pair with probability `p`.
pub fn random_dag(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Dag {
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let mut g = Dag::new(n).unwrap();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random_bool(p) {
                g.add_edge(order[i], order[j]).unwrap();
            }
        }
    }
    g
}

pub fn random_cpdag(rng: &mut ChaCha8Rng, max_nodes: usize) -> Cpdag {
    let n = rng.random_range(2..=max_nodes);
    let p = rng.random_range(0.0..0.8);
    dag_to_cpdag(&random_dag(n, p, rng))
}

type ClassKey = (BTreeSet<(usize, usize)>, BTreeSet<(usize, usize, usize)>);

pub fn class_key(g: &Dag) -> ClassKey {
    (g.skeleton(), g.v_structures())
}

/// Groups DAGs into Markov equivalence classes by skeleton and v-structures
/// and marks an edge directed iff every member orients it the same way.
pub fn cpdags_by_enumeration(all: &[Dag]) -> BTreeMap<ClassKey, Pdag> {
    let mut classes: BTreeMap<ClassKey, Vec<&Dag>> = BTreeMap::new();
    for g in all {
        classes.entry(class_key(g)).or_default().push(g);
    }
    classes
        .into_iter()
        .map(|(key, members)| {
            let mut p = Pdag::new(members[0].node_count()).unwrap();
            for &(a, b) in &key.0 {
                let fwd = members.iter().all(|m| m.has_edge(a, b));
                let bwd = members.iter().all(|m| m.has_edge(b, a));
                match (fwd, bwd) {
                    (true, _) => p.add_directed(a, b).unwrap(),
                    (_, true) => p.add_directed(b, a).unwrap(),
                    _ => p.add_undirected(a, b).unwrap(),
                }
            }
            (key, p)
        })
        .collect()
}

/// Dense 0/1 adjacency matrix; an undirected edge sets both entries.
pub fn adjacency(g: &Pdag) -> Vec<Vec<u8>> {
    let n = g.node_count();
    let mut m = vec![vec![0u8; n]; n];
    for (a, b) in g.directed_edges() {
        m[a][b] = 1;
    }
    for (a, b) in g.undirected_edges() {
        m[a][b] = 1;
        m[b][a] = 1;
    }
    m
}

/// Smallest number of single-pair edits (each replaces the state of one
/// unordered pair) turning `a` into `b`, by trying edit sets of growing size.
pub fn shd_by_search(a: &Pdag, b: &Pdag) -> usize {
    let (ma, mb) = (adjacency(a), adjacency(b));
    let n = ma.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    for k in 0..=pairs.len() {
        let mut found = false;
        for_each_subset(pairs.len(), k, &mut |subset| {
            if found {
                return;
            }
            let mut m = ma.clone();
            for &p in subset {
                let (i, j) = pairs[p];
                m[i][j] = mb[i][j];
                m[j][i] = mb[j][i];
            }
            found = m == mb;
        });
        if found {
            return k;
        }
    }
    unreachable!()
}

fn for_each_subset(n: usize, k: usize, f: &mut dyn FnMut(&[usize])) {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    go(0, n, k, &mut Vec::new(), f);
}

/// (true positives, estimated entries, true entries) over adjacency matrices.
pub fn entry_counts(estimate: &Pdag, truth: &Pdag) -> (usize, usize, usize) {
    let (e, t) = (adjacency(estimate), adjacency(truth));
    let mut counts = (0, 0, 0);
    for i in 0..e.len() {
        for j in 0..e.len() {
            counts.0 += (e[i][j] & t[i][j]) as usize;
            counts.1 += e[i][j] as usize;
            counts.2 += t[i][j] as usize;
        }
    }
    counts
}

pub fn f1_by_definition(estimate: &Pdag, truth: &Pdag) -> (f64, f64, f64) {
    let (tp, est, tru) = entry_counts(estimate, truth);
    let precision = if tp == 0 { 0.0 } else { tp as f64 / est as f64 };
    let recall = if tp == 0 { 0.0 } else { tp as f64 / tru as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    (precision, recall, f1)
}

/// Rank-sum AUC: probability that a dependent score exceeds an independent
/// one, ties counting one half.
pub fn auc(independent: &[f64], dependent: &[f64]) -> f64 {
    let mut wins = 0.0;
    for d in dependent {
        for i in independent {
            wins += if d > i {
                1.0
            } else if d == i {
                0.5
            } else {
                0.0
            };
        }
    }
    wins / (independent.len() * dependent.len()) as f64
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn standard_normal(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    use rand_distr::{Distribution, StandardNormal};
    (0..n).map(|_| StandardNormal.sample(r)).collect()
}

fn link(k: u64, v: f64) -> f64 {
    match k % 4 {
        0 => v.sin() * 1.5,
        1 => v.tanh() * 2.0,
        2 => 0.5 * v * v,
        _ => 0.3 * v * v * v,
    }
}

/// Columns `(x, y, z)`. Both `x` and `y` depend on `z` through seeded
/// nonlinear links; if `dependent`, `y` also depends on `x`.
pub fn triple(n: usize, seed: u64, dependent: bool) -> ncdges::Dataset {
    let mut r = rng(seed);
    let z = standard_normal(&mut r, n);
    let ex = standard_normal(&mut r, n);
    let ey = standard_normal(&mut r, n);
    let (kx, ky, kd) = (seed, seed / 4 + 1, seed / 16 + 2);
    let mut values = ndarray::Array2::zeros((n, 3));
    for i in 0..n {
        let x = link(kx, z[i]) + 0.5 * ex[i];
        let mut y = link(ky, z[i]) + 0.5 * ey[i];
        if dependent {
            y += link(kd, x);
        }
        values[[i, 0]] = x;
        values[[i, 1]] = y;
        values[[i, 2]] = z[i];
    }
    ncdges::Dataset::unnamed(values).unwrap()
}
