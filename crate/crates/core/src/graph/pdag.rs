use super::dag::check_node_count;
use super::{Dag, GraphError, NodeSet};

/// A partially directed graph: every adjacency is either `a → b` or `a -- b`.
///
/// The search state of GES is a completed PDAG (CPDAG), where directed edges
/// are exactly the compelled ones. Intermediate graphs produced while
/// applying an operator use the same type.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Pdag {
    children: Vec<NodeSet>,
    parents: Vec<NodeSet>,
    undirected: Vec<NodeSet>,
}

/// A [`Pdag`] that represents a Markov equivalence class.
pub type Cpdag = Pdag;

impl Pdag {
    pub fn new(node_count: usize) -> Result<Self, GraphError> {
        check_node_count(node_count)?;
        Ok(Self::empty(node_count))
    }

    pub(crate) fn empty(node_count: usize) -> Self {
        Pdag {
            children: vec![NodeSet::EMPTY; node_count],
            parents: vec![NodeSet::EMPTY; node_count],
            undirected: vec![NodeSet::EMPTY; node_count],
        }
    }

    /// Builds a mixed graph from directed and undirected edge lists.
    pub fn from_edges(
        node_count: usize,
        directed: impl IntoIterator<Item = (usize, usize)>,
        undirected: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, GraphError> {
        let mut g = Pdag::new(node_count)?;
        for (a, b) in directed {
            g.add_directed(a, b)?;
        }
        for (a, b) in undirected {
            g.add_undirected(a, b)?;
        }
        Ok(g)
    }

    /// The DAG with every edge kept directed.
    pub fn from_dag(dag: &Dag) -> Self {
        let mut g = Pdag::empty(dag.node_count());
        for (a, b) in dag.edges() {
            g.children[a].insert(b);
            g.parents[b].insert(a);
        }
        g
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.children.len()
    }

    pub fn add_directed(&mut self, from: usize, to: usize) -> Result<(), GraphError> {
        self.check_pair(from, to)?;
        self.children[from].insert(to);
        self.parents[to].insert(from);
        Ok(())
    }

    pub fn add_undirected(&mut self, a: usize, b: usize) -> Result<(), GraphError> {
        self.check_pair(a, b)?;
        self.undirected[a].insert(b);
        self.undirected[b].insert(a);
        Ok(())
    }

    /// Removes whatever edge joins `a` and `b`.
    pub fn remove_adjacency(&mut self, a: usize, b: usize) {
        self.children[a].remove(b);
        self.children[b].remove(a);
        self.parents[a].remove(b);
        self.parents[b].remove(a);
        self.undirected[a].remove(b);
        self.undirected[b].remove(a);
    }

    /// Turns `a -- b` into `a → b`. No-op unless the edge is undirected.
    pub fn orient(&mut self, a: usize, b: usize) {
        if self.undirected[a].contains(b) {
            self.undirected[a].remove(b);
            self.undirected[b].remove(a);
            self.children[a].insert(b);
            self.parents[b].insert(a);
        }
    }

    #[inline]
    pub fn has_directed(&self, from: usize, to: usize) -> bool {
        self.children[from].contains(to)
    }

    #[inline]
    pub fn has_undirected(&self, a: usize, b: usize) -> bool {
        self.undirected[a].contains(b)
    }

    #[inline]
    pub fn is_adjacent(&self, a: usize, b: usize) -> bool {
        self.adjacents(a).contains(b)
    }

    /// Parents via directed edges only.
    #[inline]
    pub fn parents(&self, node: usize) -> NodeSet {
        self.parents[node]
    }

    #[inline]
    pub fn children(&self, node: usize) -> NodeSet {
        self.children[node]
    }

    /// Nodes joined to `node` by an undirected edge.
    #[inline]
    pub fn undirected_neighbors(&self, node: usize) -> NodeSet {
        self.undirected[node]
    }

    /// Nodes joined to `node` by any edge.
    #[inline]
    pub fn adjacents(&self, node: usize) -> NodeSet {
        self.children[node]
            .union(self.parents[node])
            .union(self.undirected[node])
    }

    /// Number of adjacencies (each undirected edge counts once).
    pub fn edge_count(&self) -> usize {
        let d: usize = self.children.iter().map(|c| c.len()).sum();
        let u: usize = self.undirected.iter().map(|c| c.len()).sum();
        d + u / 2
    }

    pub fn directed_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.children
            .iter()
            .enumerate()
            .flat_map(|(a, cs)| cs.iter().map(move |b| (a, b)))
    }

    /// Undirected edges as `(a, b)` with `a < b`.
    pub fn undirected_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.undirected
            .iter()
            .enumerate()
            .flat_map(|(a, ns)| ns.iter().filter(move |&b| b > a).map(move |b| (a, b)))
    }

    /// True when every pair in `set` is adjacent.
    pub fn is_clique(&self, set: NodeSet) -> bool {
        set.iter()
            .all(|v| set.without(v).is_subset(self.adjacents(v)))
    }

    fn check_pair(&self, a: usize, b: usize) -> Result<(), GraphError> {
        let n = self.node_count();
        for v in [a, b] {
            if v >= n {
                return Err(GraphError::NodeOutOfRange {
                    node: v,
                    node_count: n,
                });
            }
        }
        if a == b {
            return Err(GraphError::SelfLoop(a));
        }
        if self.is_adjacent(a, b) {
            return Err(GraphError::DuplicateEdge(a, b));
        }
        Ok(())
    }
}

impl std::fmt::Debug for Pdag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Pdag({}; ", self.node_count())?;
        let dir = self.directed_edges().map(|(a, b)| format!("{a}->{b}"));
        let und = self.undirected_edges().map(|(a, b)| format!("{a}--{b}"));
        let parts: Vec<String> = dir.chain(und).collect();
        write!(f, "{})", parts.join(", "))
    }
}
