//! Labeled simple graphs and the valid-cluster atlas.
//!
//! Vertices carry the labels `1..=n`. An edge `(i, j)` is always stored with
//! `i < j`, and the edge list is kept in lexicographic order; the position of
//! an edge in that list is its index everywhere else in the crate (rows of
//! cycle-basis matrices, entries of momentum assignments).

mod blocks;
mod cycles;
mod enumerate;
mod trees;

pub use blocks::{block_decomposition, Block, BlockTree};
pub use cycles::{cycle_basis, CycleBasis};
pub use enumerate::{Atlas, EdgeTable, ValidMasks, DEFAULT_CEILING, MAX_CEILING};
pub use trees::{count_spanning_trees, gram_determinant};

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub type Edge = (usize, usize);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("edge {0}-{1} is not a valid edge on {2} vertices")]
    BadEdge(usize, usize, usize),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(usize, usize),
    #[error("cannot parse graph line {line:?}: {reason}")]
    Parse { line: String, reason: String },
    #[error("n = {n} exceeds the enumeration ceiling {ceiling}")]
    Capacity { n: usize, ceiling: usize },
    #[error("graph is not a valid cluster: bridge {0}-{1}")]
    Bridge(usize, usize),
    #[error("graph is not connected")]
    Disconnected,
    #[error("graph is not a valid cluster: {0}")]
    Invalid(String),
    #[error("{0}")]
    Domain(String),
}

/// Simple undirected graph on the vertex labels `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LabeledGraph {
    n: usize,
    edges: Vec<Edge>,
}

impl LabeledGraph {
    /// Builds a graph, orienting each pair as `(min, max)` and sorting.
    pub fn new(n: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self, GraphError> {
        let mut list = Vec::new();
        for (a, b) in edges {
            let (i, j) = (a.min(b), a.max(b));
            if i == 0 || j > n || i == j {
                return Err(GraphError::BadEdge(a, b, n));
            }
            list.push((i, j));
        }
        list.sort_unstable();
        if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
            return Err(GraphError::DuplicateEdge(w[0].0, w[0].1));
        }
        Ok(Self { n, edges: list })
    }

    pub fn empty(n: usize) -> Self {
        Self { n, edges: Vec::new() }
    }

    /// The cycle visiting `labels` in order (at least three distinct labels).
    pub fn cycle_through(n: usize, labels: &[usize]) -> Result<Self, GraphError> {
        if labels.len() < 3 {
            return Err(GraphError::Domain("a cycle needs at least 3 vertices".into()));
        }
        let k = labels.len();
        Self::new(n, (0..k).map(|i| (labels[i], labels[(i + 1) % k])))
    }

    /// The cycle `1-2-...-n-1`.
    pub fn cycle(n: usize) -> Result<Self, GraphError> {
        Self::cycle_through(n, &(1..=n).collect::<Vec<_>>())
    }

    pub fn complete(n: usize) -> Self {
        let edges = (1..=n).flat_map(|i| (i + 1..=n).map(move |j| (i, j))).collect();
        Self { n, edges }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        self.edges.binary_search(&(i.min(j), i.max(j))).ok()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(i, j)| i == v || j == v).count()
    }

    /// Neighbour lists indexed by label (slot 0 unused), ascending.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n + 1];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        for list in adj.iter_mut() {
            list.sort_unstable();
        }
        adj
    }

    /// Incident `(neighbour, edge index)` pairs per label, neighbours ascending.
    pub fn incidence(&self) -> Vec<Vec<(usize, usize)>> {
        let mut inc = vec![Vec::new(); self.n + 1];
        for (e, &(i, j)) in self.edges.iter().enumerate() {
            inc[i].push((j, e));
            inc[j].push((i, e));
        }
        for list in inc.iter_mut() {
            list.sort_unstable();
        }
        inc
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; self.n + 1];
        let mut stack = vec![1];
        seen[1] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }

    /// All bridges, by the low-link depth-first traversal, in edge order.
    pub fn bridges(&self) -> Vec<Edge> {
        let inc = self.incidence();
        let mut disc = vec![0usize; self.n + 1];
        let mut low = vec![0usize; self.n + 1];
        let mut timer = 0;
        let mut found = Vec::new();
        for root in 1..=self.n {
            if disc[root] != 0 {
                continue;
            }
            // iterative DFS: (vertex, parent edge, next incidence slot)
            timer += 1;
            disc[root] = timer;
            low[root] = timer;
            let mut stack: Vec<(usize, Option<usize>, usize)> = vec![(root, None, 0)];
            while let Some(top) = stack.last_mut() {
                let (v, parent_edge, slot) = *top;
                if slot < inc[v].len() {
                    top.2 += 1;
                    let (w, e) = inc[v][slot];
                    if Some(e) == parent_edge {
                        continue;
                    }
                    if disc[w] == 0 {
                        timer += 1;
                        disc[w] = timer;
                        low[w] = timer;
                        stack.push((w, Some(e), 0));
                    } else {
                        low[v] = low[v].min(disc[w]);
                    }
                } else {
                    stack.pop();
                    if let (Some(e), Some(&(p, _, _))) = (parent_edge, stack.last()) {
                        low[p] = low[p].min(low[v]);
                        if low[v] > disc[p] {
                            found.push(self.edges[e]);
                        }
                    }
                }
            }
        }
        found.sort_unstable();
        found
    }

    /// Membership test for the valid clusters: the single vertex, or a
    /// connected bridgeless graph on at least three vertices.
    pub fn is_valid(&self) -> bool {
        match self.n {
            0 => false,
            1 => true,
            2 => false,
            _ => self.is_connected() && self.bridges().is_empty(),
        }
    }

    /// Applies `perm` (label `v` goes to `perm[v - 1]`).
    pub fn relabel(&self, perm: &[usize]) -> Result<Self, GraphError> {
        assert_eq!(perm.len(), self.n);
        Self::new(self.n, self.edges.iter().map(|&(i, j)| (perm[i - 1], perm[j - 1])))
    }
}

/// Whether `g` is valid in the sense of the validity lemma.
pub fn is_valid(g: &LabeledGraph) -> bool {
    g.is_valid()
}

impl fmt::Display for LabeledGraph {
    /// Interchange form `n;i1-j1,i2-j2,...`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{};", self.n)?;
        for (k, (i, j)) in self.edges.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{i}-{j}")?;
        }
        Ok(())
    }
}

impl FromStr for LabeledGraph {
    type Err = GraphError;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let bad = |reason: &str| GraphError::Parse { line: line.to_string(), reason: reason.to_string() };
        let (n, rest) = line.trim().split_once(';').ok_or_else(|| bad("missing ';'"))?;
        let n: usize = n.trim().parse().map_err(|_| bad("vertex count"))?;
        let mut edges = Vec::new();
        for item in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (a, b) = item.split_once('-').ok_or_else(|| bad("edge without '-'"))?;
            let a = a.trim().parse().map_err(|_| bad("edge label"))?;
            let b = b.trim().parse().map_err(|_| bad("edge label"))?;
            edges.push((a, b));
        }
        let g = Self::new(n, edges)?;
        let canonical = rest.split(',').map(str::trim).filter(|s| !s.is_empty()).collect::<Vec<_>>().join(",");
        let expected = g.to_string();
        if expected.split_once(';').map(|x| x.1) != Some(canonical.as_str()) {
            return Err(bad("edges must be listed as i-j with i < j in sorted order"));
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> LabeledGraph {
        LabeledGraph::new(3, [(1, 2), (2, 3)]).unwrap()
    }

    #[test]
    fn validity_examples() {
        assert!(LabeledGraph::cycle(3).unwrap().is_valid());
        assert!(!path3().is_valid());
        let bowtie = LabeledGraph::new(5, [(1, 2), (1, 3), (2, 3), (3, 4), (3, 5), (4, 5)]).unwrap();
        assert!(bowtie.is_valid());
        assert!(LabeledGraph::empty(1).is_valid());
        assert!(!LabeledGraph::empty(2).is_valid());
        let two_triangles = LabeledGraph::new(6, [(1, 2), (1, 3), (2, 3), (4, 5), (4, 6), (5, 6)]).unwrap();
        assert!(!two_triangles.is_valid());
    }

    #[test]
    fn bridges_of_triangle_with_pendant() {
        let g = LabeledGraph::new(4, [(1, 2), (1, 3), (2, 3), (1, 4)]).unwrap();
        assert_eq!(g.bridges(), vec![(1, 4)]);
        assert_eq!(path3().bridges(), vec![(1, 2), (2, 3)]);
    }

    #[test]
    fn interchange_round_trip() {
        let g = LabeledGraph::complete(3);
        assert_eq!(g.to_string(), "3;1-2,1-3,2-3");
        assert_eq!("3;1-2,1-3,2-3".parse::<LabeledGraph>().unwrap(), g);
        assert_eq!("1;".parse::<LabeledGraph>().unwrap(), LabeledGraph::empty(1));
        assert!("3;2-1".parse::<LabeledGraph>().is_err());
        assert!("3;1-3,1-2".parse::<LabeledGraph>().is_err());
        assert!("3;1-4".parse::<LabeledGraph>().is_err());
    }

    #[test]
    fn constructor_rejects_loops_and_duplicates() {
        assert!(LabeledGraph::new(3, [(2, 2)]).is_err());
        assert!(LabeledGraph::new(3, [(1, 2), (2, 1)]).is_err());
        assert_eq!(LabeledGraph::new(3, [(3, 1)]).unwrap().edges(), &[(1, 3)]);
    }
}
