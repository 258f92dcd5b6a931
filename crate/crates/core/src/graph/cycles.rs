//! Fundamental cycle bases.
//!
//! The spanning tree is grown breadth-first from the smallest label with
//! neighbours taken in ascending order, so the coefficient matrix is a pure
//! function of the labelled graph. Every non-tree edge closes one
//! fundamental cycle; the cycle is oriented along its non-tree edge `i → j`
//! (`i < j`), and an edge traversed from its larger to its smaller endpoint
//! carries coefficient -1. With this orientation each column is a
//! circulation: the vertex sums `Z_k` of the column vanish.

use std::collections::VecDeque;

use super::{GraphError, LabeledGraph};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleBasis {
    graph: LabeledGraph,
    /// Per cycle, `(edge index, sign)` in traversal order.
    cycles: Vec<Vec<(usize, i8)>>,
    /// `|E| × N_free`, entries in {-1, 0, 1}.
    coefficients: Vec<Vec<i8>>,
    tree_edges: Vec<usize>,
}

impl CycleBasis {
    pub fn graph(&self) -> &LabeledGraph {
        &self.graph
    }

    pub fn cycles(&self) -> &[Vec<(usize, i8)>] {
        &self.cycles
    }

    pub fn coefficients(&self) -> &[Vec<i8>] {
        &self.coefficients
    }

    pub fn tree_edges(&self) -> &[usize] {
        &self.tree_edges
    }

    /// `N_free = |E| - |V| + 1`.
    pub fn free_count(&self) -> usize {
        self.cycles.len()
    }

    /// Reorders and re-signs the basis columns. Used to check that weights do
    /// not depend on the chosen generating set.
    pub fn transformed(&self, order: &[usize], signs: &[i8]) -> Self {
        assert_eq!(order.len(), self.free_count());
        let cycles = order
            .iter()
            .zip(signs)
            .map(|(&k, &s)| self.cycles[k].iter().map(|&(e, c)| (e, c * s)).collect())
            .collect();
        let coefficients = self
            .coefficients
            .iter()
            .map(|row| order.iter().zip(signs).map(|(&k, &s)| row[k] * s).collect())
            .collect();
        Self { graph: self.graph.clone(), cycles, coefficients, tree_edges: self.tree_edges.clone() }
    }

    /// Replaces column `target` by `target + sign·source`, another valid
    /// (non-fundamental) generating set of the same cycle space.
    pub fn sheared(&self, target: usize, source: usize, sign: i8) -> Self {
        assert_ne!(target, source);
        let mut coefficients = self.coefficients.clone();
        for row in coefficients.iter_mut() {
            row[target] += sign * row[source];
        }
        let cycles = (0..self.free_count())
            .map(|k| {
                coefficients
                    .iter()
                    .enumerate()
                    .filter(|(_, row)| row[k] != 0)
                    .map(|(e, row)| (e, row[k]))
                    .collect()
            })
            .collect();
        Self { graph: self.graph.clone(), cycles, coefficients, tree_edges: self.tree_edges.clone() }
    }
}

/// Fundamental cycle basis of a connected bridgeless graph.
pub fn cycle_basis(g: &LabeledGraph) -> Result<CycleBasis, GraphError> {
    if !g.is_connected() {
        return Err(GraphError::Disconnected);
    }
    if let Some(&(i, j)) = g.bridges().first() {
        return Err(GraphError::Bridge(i, j));
    }
    let n = g.n();
    let inc = g.incidence();
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; n + 1];
    let mut depth = vec![usize::MAX; n + 1];
    let mut in_tree = vec![false; g.edge_count()];
    let mut queue = VecDeque::new();
    if n > 0 {
        depth[1] = 0;
        queue.push_back(1);
    }
    while let Some(v) = queue.pop_front() {
        for &(w, e) in &inc[v] {
            if depth[w] == usize::MAX {
                depth[w] = depth[v] + 1;
                parent[w] = Some((v, e));
                in_tree[e] = true;
                queue.push_back(w);
            }
        }
    }

    let sign_of = |from: usize, to: usize| if from < to { 1i8 } else { -1i8 };
    let mut cycles = Vec::new();
    for (e, &(i, j)) in g.edges().iter().enumerate() {
        if in_tree[e] {
            continue;
        }
        // i → j along the chord, then back from j to i through the tree
        let mut up_from_j = Vec::new();
        let mut up_from_i = Vec::new();
        let (mut a, mut b) = (j, i);
        while a != b {
            if depth[a] >= depth[b] {
                let (p, pe) = parent[a].expect("non-root has a parent");
                up_from_j.push((pe, sign_of(a, p)));
                a = p;
            } else {
                let (p, pe) = parent[b].expect("non-root has a parent");
                // traversed later in the direction p → b
                up_from_i.push((pe, sign_of(p, b)));
                b = p;
            }
        }
        let mut cycle = vec![(e, 1i8)];
        cycle.extend(up_from_j);
        cycle.extend(up_from_i.into_iter().rev());
        cycles.push(cycle);
    }

    let mut coefficients = vec![vec![0i8; cycles.len()]; g.edge_count()];
    for (k, cycle) in cycles.iter().enumerate() {
        for &(e, s) in cycle {
            coefficients[e][k] = s;
        }
    }
    let tree_edges = (0..g.edge_count()).filter(|&e| in_tree[e]).collect();
    Ok(CycleBasis { graph: g.clone(), cycles, coefficients, tree_edges })
}
