//! Exhaustive enumeration of the valid clusters on labels `1..=n`.
//!
//! Edge subsets are visited in lexicographic order of their sorted edge
//! lists, which is a pre-order walk of the subset tree. A subtree is cut as
//! soon as some vertex can no longer reach degree two: once the last chosen
//! edge is `(a, b)`, vertices below `a` receive no further edges and vertex
//! `a` can only gain the `n - b` edges `(a, b+1), ..., (a, n)`.
//!
//! The walk splits into independent partitions keyed by the first two edges;
//! partitions are listed in canonical order, so concatenating their outputs
//! reproduces the sequential stream.

use rayon::prelude::*;

use super::{Edge, GraphError, LabeledGraph};

pub const DEFAULT_CEILING: usize = 9;
/// Edge masks are `u64`, which fits the 55 pairs of 11 vertices.
pub const MAX_CEILING: usize = 11;

/// Index ↔ pair table for the complete graph on `n` labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeTable {
    n: usize,
    pairs: Vec<Edge>,
}

impl EdgeTable {
    pub fn new(n: usize) -> Self {
        let pairs = (1..=n).flat_map(|i| (i + 1..=n).map(move |j| (i, j))).collect();
        Self { n, pairs }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pair(&self, index: usize) -> Edge {
        self.pairs[index]
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = (i.min(j), i.max(j));
        // edges before row i: Σ_{r<i} (n - r)
        (i - 1) * self.n - (i - 1) * i / 2 + (j - i - 1)
    }

    pub fn graph(&self, mask: u64) -> LabeledGraph {
        let edges = (0..self.pairs.len()).filter(|&e| mask >> e & 1 == 1).map(|e| self.pairs[e]);
        LabeledGraph::new(self.n, edges).expect("mask edges are simple")
    }

    pub fn mask(&self, g: &LabeledGraph) -> u64 {
        assert_eq!(g.n(), self.n);
        g.edges().iter().fold(0, |m, &(i, j)| m | 1 << self.index(i, j))
    }
}

/// Connected and bridgeless test on a bitmask adjacency (vertex `v` is bit
/// `v - 1`), by the low-link traversal.
fn mask_graph_is_valid(n: usize, adj: &[u16]) -> bool {
    if n == 1 {
        return true;
    }
    if n == 2 || adj[..n].iter().any(|a| a.count_ones() < 2) {
        return false;
    }
    let mut disc = [0u8; 16];
    let mut low = [0u8; 16];
    let mut timer = 0u8;
    fn dfs(v: usize, parent: usize, adj: &[u16], disc: &mut [u8; 16], low: &mut [u8; 16], timer: &mut u8) -> bool {
        *timer += 1;
        disc[v] = *timer;
        low[v] = *timer;
        let mut rest = adj[v];
        while rest != 0 {
            let w = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            if w == parent {
                continue;
            }
            if disc[w] == 0 {
                if !dfs(w, v, adj, disc, low, timer) {
                    return false;
                }
                low[v] = low[v].min(low[w]);
                if low[w] > disc[v] {
                    return false;
                }
            } else {
                low[v] = low[v].min(disc[w]);
            }
        }
        true
    }
    if !dfs(0, usize::MAX, adj, &mut disc, &mut low, &mut timer) {
        return false;
    }
    timer as usize == n
}

/// Pre-order walk over the edge subsets below one root prefix.
#[derive(Debug, Clone)]
pub struct ValidMasks {
    n: usize,
    pairs: Vec<(u8, u8)>,
    stack: Vec<u8>,
    root_len: usize,
    deg: [u8; 16],
    adj: [u16; 16],
    mask: u64,
    started: bool,
    skip_children: bool,
    done: bool,
}

impl ValidMasks {
    fn new(table: &EdgeTable, root: &[usize]) -> Self {
        let pairs = table.pairs.iter().map(|&(i, j)| ((i - 1) as u8, (j - 1) as u8)).collect();
        let mut it = Self {
            n: table.n,
            pairs,
            stack: Vec::with_capacity(table.len()),
            root_len: root.len(),
            deg: [0; 16],
            adj: [0; 16],
            mask: 0,
            started: false,
            skip_children: false,
            done: root.is_empty(),
        };
        for &e in root {
            it.push(e as u8);
        }
        it
    }

    fn push(&mut self, e: u8) {
        let (a, b) = self.pairs[e as usize];
        self.deg[a as usize] += 1;
        self.deg[b as usize] += 1;
        self.adj[a as usize] ^= 1 << b;
        self.adj[b as usize] ^= 1 << a;
        self.mask |= 1 << e;
        self.stack.push(e);
    }

    fn pop(&mut self) -> u8 {
        let e = self.stack.pop().expect("non-empty walk stack");
        let (a, b) = self.pairs[e as usize];
        self.deg[a as usize] -= 1;
        self.deg[b as usize] -= 1;
        self.adj[a as usize] ^= 1 << b;
        self.adj[b as usize] ^= 1 << a;
        self.mask &= !(1 << e);
        e
    }

    fn to_sibling(&mut self) {
        let total = self.pairs.len() as u8;
        loop {
            if self.stack.len() <= self.root_len {
                self.done = true;
                return;
            }
            let last = self.pop();
            if last + 1 < total {
                self.push(last + 1);
                return;
            }
        }
    }

    fn to_child(&mut self) {
        let last = *self.stack.last().expect("non-empty walk stack");
        if (last as usize) + 1 < self.pairs.len() {
            self.push(last + 1);
        } else {
            self.to_sibling();
        }
    }

    /// True when no superset reachable below the current node is valid.
    fn dead(&self) -> bool {
        let last = *self.stack.last().expect("non-empty walk stack");
        let (a, b) = self.pairs[last as usize];
        if self.deg[..a as usize].iter().any(|&d| d < 2) {
            return true;
        }
        (self.deg[a as usize] as usize) + (self.n - 1 - b as usize) < 2
    }
}

impl Iterator for ValidMasks {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        loop {
            if self.done {
                return None;
            }
            if self.started {
                if self.skip_children {
                    self.to_sibling();
                } else {
                    self.to_child();
                }
                if self.done {
                    return None;
                }
            }
            self.started = true;
            if self.dead() {
                self.skip_children = true;
                continue;
            }
            self.skip_children = false;
            if mask_graph_is_valid(self.n, &self.adj) {
                return Some(self.mask);
            }
        }
    }
}

/// Enumerator of the valid clusters `Σ_n`, bounded by a size ceiling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Atlas {
    ceiling: usize,
}

impl Default for Atlas {
    fn default() -> Self {
        Self { ceiling: DEFAULT_CEILING }
    }
}

impl Atlas {
    pub fn new(ceiling: usize) -> Result<Self, GraphError> {
        if ceiling > MAX_CEILING {
            return Err(GraphError::Capacity { n: ceiling, ceiling: MAX_CEILING });
        }
        Ok(Self { ceiling })
    }

    pub fn ceiling(&self) -> usize {
        self.ceiling
    }

    fn check(&self, n: usize) -> Result<(), GraphError> {
        if n == 0 {
            return Err(GraphError::Domain("n must be positive".into()));
        }
        if n > self.ceiling {
            return Err(GraphError::Capacity { n, ceiling: self.ceiling });
        }
        Ok(())
    }

    /// Root prefixes of the independent partitions, in canonical order.
    pub fn partitions(&self, n: usize) -> Result<Vec<Vec<usize>>, GraphError> {
        self.check(n)?;
        if n < 3 {
            return Ok(Vec::new());
        }
        // vertex 1 needs two edges, and its edges come first
        let first = n - 1;
        Ok((0..first).flat_map(|a| (a + 1..first).map(move |b| vec![a, b])).collect())
    }

    /// Valid-cluster edge masks in one partition.
    pub fn partition_masks(&self, n: usize, root: &[usize]) -> ValidMasks {
        ValidMasks::new(&EdgeTable::new(n), root)
    }

    /// All edge masks of `Σ_n` in canonical order.
    pub fn masks(&self, n: usize) -> Result<Box<dyn Iterator<Item = u64> + Send>, GraphError> {
        self.check(n)?;
        if n == 1 {
            return Ok(Box::new(std::iter::once(0)));
        }
        let table = EdgeTable::new(n);
        let roots = self.partitions(n)?;
        Ok(Box::new(roots.into_iter().flat_map(move |r| ValidMasks::new(&table, &r))))
    }

    /// Streams `Σ_n` in canonical order, stopping after `limit` graphs.
    pub fn enumerate_valid(
        &self,
        n: usize,
        limit: Option<usize>,
    ) -> Result<impl Iterator<Item = LabeledGraph> + Send, GraphError> {
        let table = EdgeTable::new(n);
        let masks = self.masks(n)?;
        Ok(masks.take(limit.unwrap_or(usize::MAX)).map(move |m| table.graph(m)))
    }

    /// Applies `f` to every partition in parallel and returns the results in
    /// canonical partition order. The single-vertex graph (n = 1) forms one
    /// partition of its own.
    pub fn map_partitions<T, F>(&self, n: usize, f: F) -> Result<Vec<T>, GraphError>
    where
        T: Send,
        F: Fn(&EdgeTable, &mut dyn Iterator<Item = u64>) -> T + Sync,
    {
        self.check(n)?;
        let table = EdgeTable::new(n);
        if n == 1 {
            return Ok(vec![f(&table, &mut std::iter::once(0))]);
        }
        let roots = self.partitions(n)?;
        Ok(roots
            .par_iter()
            .map(|r| {
                let mut it = ValidMasks::new(&table, r);
                f(&table, &mut it)
            })
            .collect())
    }

    /// `(n-1)!/2` Hamiltonian cycles on `1..=n`, each listed once: vertex 1
    /// first, and the second label smaller than the last.
    pub fn enumerate_cycles_only(&self, n: usize) -> Result<impl Iterator<Item = LabeledGraph>, GraphError> {
        if n < 3 {
            return Err(GraphError::Domain(format!("cycles need n >= 3, got {n}")));
        }
        self.check(n)?;
        let mut rest: Vec<usize> = (2..=n).collect();
        let mut out = Vec::new();
        permute(&mut rest, 0, &mut |p: &[usize]| {
            if p[0] < p[p.len() - 1] {
                let mut labels = vec![1];
                labels.extend_from_slice(p);
                out.push(LabeledGraph::cycle_through(n, &labels).expect("distinct labels"));
            }
        });
        out.sort();
        Ok(out.into_iter())
    }
}

fn permute(items: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}
