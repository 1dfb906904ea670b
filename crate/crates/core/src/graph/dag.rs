use std::collections::BTreeSet;

use super::{GraphError, NodeSet, MAX_NODES};

/// A directed acyclic graph over dense node indices `0..n`.
///
/// Acyclicity is enforced on every insertion.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dag {
    children: Vec<NodeSet>,
    parents: Vec<NodeSet>,
}

impl Dag {
    pub fn new(node_count: usize) -> Result<Self, GraphError> {
        check_node_count(node_count)?;
        Ok(Dag {
            children: vec![NodeSet::EMPTY; node_count],
            parents: vec![NodeSet::EMPTY; node_count],
        })
    }

    pub fn from_edges(
        node_count: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, GraphError> {
        let mut dag = Dag::new(node_count)?;
        for (a, b) in edges {
            dag.add_edge(a, b)?;
        }
        Ok(dag)
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.children.len()
    }

    /// Adds `parent → child`. Rejects self-loops, duplicates, and cycles.
    pub fn add_edge(&mut self, parent: usize, child: usize) -> Result<(), GraphError> {
        self.check_node(parent)?;
        self.check_node(child)?;
        if parent == child {
            return Err(GraphError::SelfLoop(parent));
        }
        if self.children[parent].contains(child) || self.children[child].contains(parent) {
            return Err(GraphError::DuplicateEdge(parent, child));
        }
        if self.descendants(child).contains(parent) {
            return Err(GraphError::Cycle(parent, child));
        }
        self.children[parent].insert(child);
        self.parents[child].insert(parent);
        Ok(())
    }

    pub fn remove_edge(&mut self, parent: usize, child: usize) -> bool {
        let had = self.has_edge(parent, child);
        if had {
            self.children[parent].remove(child);
            self.parents[child].remove(parent);
        }
        had
    }

    #[inline]
    pub fn has_edge(&self, parent: usize, child: usize) -> bool {
        self.children
            .get(parent)
            .is_some_and(|c| c.contains(child))
    }

    #[inline]
    pub fn is_adjacent(&self, a: usize, b: usize) -> bool {
        self.has_edge(a, b) || self.has_edge(b, a)
    }

    #[inline]
    pub fn parents(&self, node: usize) -> NodeSet {
        self.parents[node]
    }

    #[inline]
    pub fn children(&self, node: usize) -> NodeSet {
        self.children[node]
    }

    #[inline]
    pub fn neighbors(&self, node: usize) -> NodeSet {
        self.parents[node].union(self.children[node])
    }

    pub fn edge_count(&self) -> usize {
        self.children.iter().map(|c| c.len()).sum()
    }

    /// Edges as `(parent, child)`, sorted by parent then child.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.children
            .iter()
            .enumerate()
            .flat_map(|(p, cs)| cs.iter().map(move |c| (p, c)))
    }

    /// Kahn's algorithm, always taking the lowest-index available node.
    pub fn topological_order(&self) -> Vec<usize> {
        let n = self.node_count();
        let mut indeg: Vec<usize> = self.parents.iter().map(|p| p.len()).collect();
        let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for c in self.children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        debug_assert_eq!(order.len(), n);
        order
    }

    /// Nodes reachable from `node` by a nonempty directed path.
    pub fn descendants(&self, node: usize) -> NodeSet {
        let mut seen = NodeSet::EMPTY;
        let mut frontier = self.children[node];
        while let Some(v) = frontier.first() {
            frontier.remove(v);
            if !seen.contains(v) {
                seen.insert(v);
                frontier = frontier.union(self.children[v].difference(seen));
            }
        }
        seen
    }

    /// Nodes in `set` together with every node that has a directed path into `set`.
    pub fn ancestors_of_set(&self, set: NodeSet) -> NodeSet {
        let mut seen = NodeSet::EMPTY;
        let mut frontier = set;
        while let Some(v) = frontier.first() {
            frontier.remove(v);
            if !seen.contains(v) {
                seen.insert(v);
                frontier = frontier.union(self.parents[v].difference(seen));
            }
        }
        seen
    }

    /// All `j != i` without a directed path `i ⇝ j`.
    pub fn non_descendants(&self, node: usize) -> NodeSet {
        NodeSet::full(self.node_count())
            .difference(self.descendants(node))
            .without(node)
    }

    /// Unordered adjacencies as `(min, max)` pairs.
    pub fn skeleton(&self) -> BTreeSet<(usize, usize)> {
        self.edges().map(|(a, b)| (a.min(b), a.max(b))).collect()
    }

    /// Triples `(a, b, c)` with `a → b ← c`, `a < c`, and `a`, `c` non-adjacent.
    pub fn v_structures(&self) -> BTreeSet<(usize, usize, usize)> {
        let mut out = BTreeSet::new();
        for b in 0..self.node_count() {
            let pa = self.parents[b].to_vec();
            for (i, &a) in pa.iter().enumerate() {
                for &c in &pa[i + 1..] {
                    if !self.is_adjacent(a, c) {
                        out.insert((a, b, c));
                    }
                }
            }
        }
        out
    }

    fn check_node(&self, node: usize) -> Result<(), GraphError> {
        if node >= self.node_count() {
            Err(GraphError::NodeOutOfRange {
                node,
                node_count: self.node_count(),
            })
        } else {
            Ok(())
        }
    }
}

impl std::fmt::Debug for Dag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Dag({}; ", self.node_count())?;
        let mut first = true;
        for (a, b) in self.edges() {
            if !first {
                write!(f, ", ")?;
            }
            first = false;
            write!(f, "{a}->{b}")?;
        }
        write!(f, ")")
    }
}

pub(super) fn check_node_count(n: usize) -> Result<(), GraphError> {
    if n == 0 || n > MAX_NODES {
        Err(GraphError::NodeCount(n))
    } else {
        Ok(())
    }
}
