//! Exact Euclidean nearest neighbors (excluding the query point itself).
//!
//! Ties are kept: each query yields every index at the minimal distance, and
//! [`nearest_neighbors`] picks one of them uniformly at random.

use ndarray::ArrayView2;
use rand::Rng;

/// Row count from which the kd-tree replaces the quadratic scan.
pub const KD_TREE_MIN_ROWS: usize = 4096;

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn rows_of(points: ArrayView2<'_, f64>) -> Vec<f64> {
    points.iter().copied().collect()
}

/// All minimal-distance neighbors of every row, by full pairwise scan.
pub fn brute_force_candidates(points: ArrayView2<'_, f64>) -> Vec<Vec<usize>> {
    let (n, d) = points.dim();
    let flat = rows_of(points);
    let row = |i: usize| &flat[i * d..(i + 1) * d];
    (0..n)
        .map(|i| {
            let mut best = f64::INFINITY;
            let mut hits = Vec::new();
            for j in 0..n {
                if j == i {
                    continue;
                }
                let dist = sq_dist(row(i), row(j));
                if dist < best {
                    best = dist;
                    hits.clear();
                    hits.push(j);
                } else if dist == best {
                    hits.push(j);
                }
            }
            hits
        })
        .collect()
}

struct KdTree<'a> {
    flat: &'a [f64],
    dim: usize,
    idx: Vec<usize>,
    nodes: Vec<KdNode>,
}

enum KdNode {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

const LEAF_SIZE: usize = 12;

impl<'a> KdTree<'a> {
    fn build(flat: &'a [f64], dim: usize, n: usize) -> Self {
        let mut tree = KdTree {
            flat,
            dim,
            idx: (0..n).collect(),
            nodes: Vec::new(),
        };
        tree.build_node(0, n);
        tree
    }

    #[inline]
    fn coord(&self, i: usize, axis: usize) -> f64 {
        self.flat[i * self.dim + axis]
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE || self.dim == 0 {
            self.nodes.push(KdNode::Leaf { start, end });
            return id;
        }
        // split on the axis of widest spread
        let axis = (0..self.dim)
            .max_by(|&a, &b| {
                let spread = |ax: usize| {
                    let (lo, hi) = self.idx[start..end].iter().fold(
                        (f64::INFINITY, f64::NEG_INFINITY),
                        |(lo, hi), &i| {
                            let c = self.coord(i, ax);
                            (lo.min(c), hi.max(c))
                        },
                    );
                    hi - lo
                };
                spread(a).total_cmp(&spread(b))
            })
            .unwrap_or(0);
        let mid = start + (end - start) / 2;
        let flat = self.flat;
        let dim = self.dim;
        self.idx[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            flat[a * dim + axis].total_cmp(&flat[b * dim + axis])
        });
        let value = self.coord(self.idx[mid], axis);
        self.nodes.push(KdNode::Leaf { start: 0, end: 0 });
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        self.nodes[id] = KdNode::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    fn query(&self, q: usize, node: usize, best: &mut f64, hits: &mut Vec<usize>) {
        match self.nodes[node] {
            KdNode::Leaf { start, end } => {
                let qrow = &self.flat[q * self.dim..(q + 1) * self.dim];
                for &j in &self.idx[start..end] {
                    if j == q {
                        continue;
                    }
                    let d = sq_dist(qrow, &self.flat[j * self.dim..(j + 1) * self.dim]);
                    if d < *best {
                        *best = d;
                        hits.clear();
                        hits.push(j);
                    } else if d == *best {
                        hits.push(j);
                    }
                }
            }
            KdNode::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = self.coord(q, axis) - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.query(q, near, best, hits);
                // `<=` keeps equidistant points on the far side reachable
                if diff * diff <= *best {
                    self.query(q, far, best, hits);
                }
            }
        }
    }
}

/// All minimal-distance neighbors of every row, via a kd-tree.
pub fn kd_tree_candidates(points: ArrayView2<'_, f64>) -> Vec<Vec<usize>> {
    let (n, d) = points.dim();
    let flat = rows_of(points);
    let tree = KdTree::build(&flat, d, n);
    (0..n)
        .map(|i| {
            let mut best = f64::INFINITY;
            let mut hits = Vec::new();
            tree.query(i, 0, &mut best, &mut hits);
            hits.sort_unstable();
            hits
        })
        .collect()
}

/// Index of a nearest neighbor of each row, ties broken uniformly at random.
pub fn nearest_neighbors<R: Rng + ?Sized>(points: ArrayView2<'_, f64>, rng: &mut R) -> Vec<usize> {
    let cands = if points.nrows() >= KD_TREE_MIN_ROWS {
        kd_tree_candidates(points)
    } else {
        brute_force_candidates(points)
    };
    cands
        .into_iter()
        .map(|c| match c.len() {
            0 => unreachable!("at least two rows"),
            1 => c[0],
            k => c[rng.random_range(0..k)],
        })
        .collect()
}
