//! Edge-momentum assignments on cluster graphs.
//!
//! The variable `z^j_i` on edge `(i, j)`, `i < j`, enters the momentum of
//! particle `k` as `Z_k = Σ_{i<k} z^k_i - Σ_{j>k} z^j_k`: it flows out of the
//! smaller label and into the larger one. A graph is valid when all `Z_k`
//! can vanish with every edge variable nonzero; for connected graphs this is
//! exactly the absence of bridges.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{cycle_basis, Edge, GraphError, LabeledGraph};
use crate::numerics::linalg::{rank, rref, to_integer};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MomentumError {
    #[error("vertex {k} is outside 1..={n}")]
    VertexOutOfRange { k: usize, n: usize },
    #[error("no nonzero assignment exists: bridge {}-{} is forced to zero", .0.0, .0.1)]
    Infeasible(Edge),
    #[error("graph is disconnected; assignments are built per connected cluster")]
    Disconnected,
    #[error("no collision-free assignment after {0} draws")]
    Exhausted(usize),
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Integer momentum vectors on the edges of a graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeMomentumAssignment {
    graph: LabeledGraph,
    dim: usize,
    /// Indexed like `graph.edges()`.
    vectors: Vec<Vec<i64>>,
}

impl EdgeMomentumAssignment {
    pub fn new(graph: LabeledGraph, dim: usize, vectors: Vec<Vec<i64>>) -> Result<Self, MomentumError> {
        if vectors.len() != graph.edge_count() || vectors.iter().any(|v| v.len() != dim) {
            return Err(MomentumError::Input("one d-vector per edge required".into()));
        }
        Ok(Self { graph, dim, vectors })
    }

    pub fn graph(&self) -> &LabeledGraph {
        &self.graph
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vectors(&self) -> &[Vec<i64>] {
        &self.vectors
    }

    /// Value of `z^j_i`, zero when the edge is absent.
    pub fn edge_value(&self, i: usize, j: usize) -> Vec<i64> {
        match self.graph.edge_index(i, j) {
            Some(e) => self.vectors[e].clone(),
            None => vec![0; self.dim],
        }
    }

    /// `Z_k`, the total momentum of particle `k`.
    pub fn vertex_sum(&self, k: usize) -> Result<Vec<i64>, MomentumError> {
        let n = self.graph.n();
        if k == 0 || k > n {
            return Err(MomentumError::VertexOutOfRange { k, n });
        }
        let mut z = vec![0i64; self.dim];
        for (&(i, j), v) in self.graph.edges().iter().zip(&self.vectors) {
            if j == k {
                z.iter_mut().zip(v).for_each(|(a, b)| *a += b);
            } else if i == k {
                z.iter_mut().zip(v).for_each(|(a, b)| *a -= b);
            }
        }
        Ok(z)
    }

    /// All vertex sums vanish.
    pub fn is_balanced(&self) -> bool {
        (1..=self.graph.n()).all(|k| self.vertex_sum(k).unwrap().iter().all(|&c| c == 0))
    }

    pub fn all_nonzero(&self) -> bool {
        self.vectors.iter().all(|v| v.iter().any(|&c| c != 0))
    }
}

impl fmt::Display for EdgeMomentumAssignment {
    /// One edge per line, `i-j: (c1,...,cd)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (&(i, j), v) in self.graph.edges().iter().zip(&self.vectors) {
            let coords: Vec<String> = v.iter().map(i64::to_string).collect();
            writeln!(f, "{i}-{j}: ({})", coords.join(","))?;
        }
        Ok(())
    }
}

/// Free-function form of [`EdgeMomentumAssignment::vertex_sum`].
pub fn vertex_sum(a: &EdgeMomentumAssignment, k: usize) -> Result<Vec<i64>, MomentumError> {
    a.vertex_sum(k)
}

const MAX_DRAWS: usize = 64;

/// Builds an all-nonzero balanced assignment on a valid cluster.
///
/// Each fundamental cycle receives a vector whose coordinate `c` is
/// `±2^{p_c}` with the exponents `p_c` a seeded permutation over the cycles,
/// and the edge values are the signed sums over incident cycles. Distinct
/// powers of two never cancel, so the collision re-draw is a safety net.
pub fn construct_assignment(g: &LabeledGraph, dim: usize, seed: u64) -> Result<EdgeMomentumAssignment, MomentumError> {
    if dim == 0 {
        return Err(MomentumError::Input("dimension must be positive".into()));
    }
    if !g.is_connected() {
        return Err(MomentumError::Disconnected);
    }
    if let Some(cert) = certify_infeasible(g) {
        return Err(MomentumError::Infeasible(cert.edge));
    }
    if g.edge_count() == 0 {
        return EdgeMomentumAssignment::new(g.clone(), dim, Vec::new());
    }
    let basis = cycle_basis(g)?;
    let k = basis.free_count();
    if k > 62 {
        return Err(MomentumError::Input(format!("{k} independent cycles exceed the 62 available exponents")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_DRAWS {
        let mut cycle_vectors = vec![vec![0i64; dim]; k];
        for c in 0..dim {
            let mut exps: Vec<u32> = (0..k as u32).collect();
            exps.shuffle(&mut rng);
            for (j, &p) in exps.iter().enumerate() {
                let sign = if rng.random::<bool>() { 1 } else { -1 };
                cycle_vectors[j][c] = sign * (1i64 << p);
            }
        }
        let vectors: Vec<Vec<i64>> = basis
            .coefficients()
            .iter()
            .map(|row| {
                (0..dim)
                    .map(|c| row.iter().zip(&cycle_vectors).map(|(&s, w)| i64::from(s) * w[c]).sum())
                    .collect()
            })
            .collect();
        let a = EdgeMomentumAssignment::new(g.clone(), dim, vectors)?;
        if a.all_nonzero() {
            debug_assert!(a.is_balanced());
            return Ok(a);
        }
    }
    Err(MomentumError::Exhausted(MAX_DRAWS))
}

/// Evidence that a graph admits no all-nonzero balanced assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BridgeCertificate {
    pub edge: Edge,
    /// Rank of the constraint system `{Z_k = 0}`; adding the equation
    /// `z_edge = 0` leaves it unchanged.
    pub constraint_rank: usize,
}

/// Incidence matrix of the constraints, one row per vertex, for a single
/// coordinate.
fn constraint_rows(g: &LabeledGraph) -> Vec<Vec<i64>> {
    let mut rows = vec![vec![0i64; g.edge_count()]; g.n()];
    for (e, &(i, j)) in g.edges().iter().enumerate() {
        rows[j - 1][e] += 1;
        rows[i - 1][e] -= 1;
    }
    rows
}

/// Whether the constraints force the variable on `edge` to zero, i.e. the
/// unit row of that edge lies in the row space (rational rank test).
pub fn edge_forced_zero(g: &LabeledGraph, edge: Edge) -> bool {
    let Some(e) = g.edge_index(edge.0, edge.1) else {
        return false;
    };
    let mut rows = constraint_rows(g);
    let base = rank(&rows);
    let mut unit = vec![0i64; g.edge_count()];
    unit[e] = 1;
    rows.push(unit);
    rank(&rows) == base
}

/// Returns a bridge whose variable the constraints force to zero, or `None`
/// when every edge lies on a cycle.
pub fn certify_infeasible(g: &LabeledGraph) -> Option<BridgeCertificate> {
    let bridge = *g.bridges().first()?;
    let rows = constraint_rows(g);
    let certified = edge_forced_zero(g, bridge);
    debug_assert!(certified, "bridge {bridge:?} not forced to zero");
    certified.then(|| BridgeCertificate { edge: bridge, constraint_rank: rank(&rows) })
}

/// General solution on the complete graph `K_n`.
///
/// `free_values` assigns vectors to the edges of `K_{n-1}`; the edges to
/// vertex `n` follow from `z^n_l = Σ_{j<l} z^l_j - Σ_{l<k<n} z^k_l`. Zero
/// values are allowed.
pub fn complete_graph_solution(
    n: usize,
    free_values: &BTreeMap<Edge, Vec<i64>>,
) -> Result<EdgeMomentumAssignment, MomentumError> {
    if n < 3 {
        return Err(MomentumError::Input(format!("complete-graph solution needs n >= 3, got {n}")));
    }
    let dim = free_values.values().next().map(Vec::len).ok_or_else(|| MomentumError::Input("no free values".into()))?;
    let mut vals: BTreeMap<Edge, Vec<i64>> = BTreeMap::new();
    for i in 1..n {
        for j in i + 1..n {
            let v = free_values
                .get(&(i, j))
                .ok_or_else(|| MomentumError::Input(format!("missing free value for edge {i}-{j}")))?;
            if v.len() != dim {
                return Err(MomentumError::Input("free values differ in dimension".into()));
            }
            vals.insert((i, j), v.clone());
        }
    }
    if free_values.len() != vals.len() {
        return Err(MomentumError::Input("free values must cover exactly the edges of K_{n-1}".into()));
    }
    for l in 1..n {
        let mut z = vec![0i64; dim];
        for j in 1..l {
            z.iter_mut().zip(&vals[&(j, l)]).for_each(|(a, b)| *a += b);
        }
        for k in l + 1..n {
            z.iter_mut().zip(&vals[&(l, k)]).for_each(|(a, b)| *a -= b);
        }
        vals.insert((l, n), z);
    }
    let g = LabeledGraph::complete(n);
    let vectors = g.edges().iter().map(|e| vals[e].clone()).collect();
    EdgeMomentumAssignment::new(g, dim, vectors)
}

/// Integer parametrization of the solutions of `{Z_k = 0}`: every edge
/// variable is `Σ_j coefficients[e][j] · w_j` with the free variables `w_j`
/// sitting on the edges `free_edges[j]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeParametrization {
    pub free_edges: Vec<usize>,
    /// `|E| × N_free`.
    pub coefficients: Vec<Vec<i64>>,
}

/// Solves the constraint system in exact rational arithmetic. Pivots are
/// taken from the last edges first, so the free variables are the earliest
/// edges in lexicographic order.
pub fn edge_parametrization(g: &LabeledGraph) -> EdgeParametrization {
    let m = g.edge_count();
    let rows = constraint_rows(g);
    let order: Vec<usize> = (0..m).rev().collect();
    let (reduced, pivots) = rref(&rows, &order);
    let pivot_cols: Vec<usize> = pivots.iter().map(|&(_, c)| c).collect();
    let free_edges: Vec<usize> = (0..m).filter(|c| !pivot_cols.contains(c)).collect();
    let mut coefficients = vec![vec![0i64; free_edges.len()]; m];
    for (j, &f) in free_edges.iter().enumerate() {
        coefficients[f][j] = 1;
    }
    for &(r, c) in &pivots {
        for (j, &f) in free_edges.iter().enumerate() {
            // pivot + Σ a_f w_f = 0
            let v = to_integer(&-reduced[r][f]).expect("incidence systems are totally unimodular");
            coefficients[c][j] = v;
        }
    }
    EdgeParametrization { free_edges, coefficients }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assignment(n: usize, values: &[((usize, usize), Vec<i64>)]) -> EdgeMomentumAssignment {
        let g = LabeledGraph::new(n, values.iter().map(|(e, _)| *e)).unwrap();
        let mut sorted: Vec<_> = values.to_vec();
        sorted.sort();
        EdgeMomentumAssignment::new(g, values[0].1.len(), sorted.into_iter().map(|(_, v)| v).collect()).unwrap()
    }

    #[test]
    fn triangle_vertex_sums_vanish() {
        let a = assignment(3, &[((1, 2), vec![1, 0]), ((1, 3), vec![-1, 0]), ((2, 3), vec![1, 0])]);
        for k in 1..=3 {
            assert_eq!(a.vertex_sum(k).unwrap(), vec![0, 0]);
        }
        assert!(a.vertex_sum(4).is_err());
        assert!(a.vertex_sum(0).is_err());
    }

    #[test]
    fn empty_graph_and_single_edge() {
        let empty = EdgeMomentumAssignment::new(LabeledGraph::empty(3), 2, vec![]).unwrap();
        assert_eq!(empty.vertex_sum(2).unwrap(), vec![0, 0]);
        let a = assignment(2, &[((1, 2), vec![3, -1])]);
        assert_eq!(a.vertex_sum(1).unwrap(), vec![-3, 1]);
        assert_eq!(a.vertex_sum(2).unwrap(), vec![3, -1]);
    }

    #[test]
    fn triangle_gets_plus_minus_pattern() {
        let a = construct_assignment(&LabeledGraph::cycle(3).unwrap(), 2, 11).unwrap();
        let v = &a.vectors()[0];
        for w in a.vectors() {
            assert!(w == v || w.iter().zip(v).all(|(x, y)| *x == -y));
        }
        assert!(a.is_balanced());
    }

    #[test]
    fn one_dimensional_cycles_use_one_magnitude() {
        for seed in 0..5 {
            let a = construct_assignment(&LabeledGraph::cycle_through(7, &[1, 4, 2, 7, 3, 6, 5]).unwrap(), 1, seed)
                .unwrap();
            let c = a.vectors()[0][0].abs();
            assert!(c > 0 && a.vectors().iter().all(|v| v[0].abs() == c));
        }
    }

    #[test]
    fn merged_square_and_triangle_values() {
        // square 1-2-5-4 and triangle 2-3-5 sharing edge (2,5)
        let g = LabeledGraph::new(5, [(1, 2), (2, 5), (4, 5), (1, 4), (2, 3), (3, 5)]).unwrap();
        let (v, w) = (vec![1i64, 0], vec![0i64, 1]);
        let neg = |x: &Vec<i64>| x.iter().map(|c| -c).collect::<Vec<_>>();
        let sub = |x: &Vec<i64>, y: &Vec<i64>| x.iter().zip(y).map(|(a, b)| a - b).collect::<Vec<_>>();
        let mut values = BTreeMap::new();
        values.insert((1, 2), v.clone());
        values.insert((1, 4), neg(&v));
        values.insert((4, 5), neg(&v));
        values.insert((2, 3), w.clone());
        values.insert((3, 5), w.clone());
        values.insert((2, 5), sub(&v, &w));
        let vectors = g.edges().iter().map(|e| values[e].clone()).collect();
        let a = EdgeMomentumAssignment::new(g.clone(), 2, vectors).unwrap();
        assert!(a.is_balanced() && a.all_nonzero());
        let built = construct_assignment(&g, 2, 3).unwrap();
        assert!(built.is_balanced() && built.all_nonzero());
    }

    #[test]
    fn construction_is_deterministic() {
        let g = LabeledGraph::complete(5);
        assert_eq!(construct_assignment(&g, 3, 42).unwrap(), construct_assignment(&g, 3, 42).unwrap());
    }

    #[test]
    fn bridges_are_certified() {
        let path = LabeledGraph::new(3, [(1, 2), (2, 3)]).unwrap();
        let cert = certify_infeasible(&path).unwrap();
        assert!(cert.edge == (1, 2) || cert.edge == (2, 3));
        let pendant = LabeledGraph::new(4, [(1, 2), (1, 3), (2, 3), (1, 4)]).unwrap();
        assert_eq!(certify_infeasible(&pendant).unwrap().edge, (1, 4));
        assert_eq!(certify_infeasible(&LabeledGraph::complete(4)), None);
        assert_eq!(construct_assignment(&pendant, 2, 0), Err(MomentumError::Infeasible((1, 4))));
        assert!(!edge_forced_zero(&pendant, (1, 2)));
    }

    #[test]
    fn complete_graph_formula() {
        let mut free = BTreeMap::new();
        free.insert((1, 2), vec![5, -2]);
        let a = complete_graph_solution(3, &free).unwrap();
        assert_eq!(a.edge_value(1, 3), vec![-5, 2]);
        assert_eq!(a.edge_value(2, 3), vec![5, -2]);

        let mut free = BTreeMap::new();
        free.insert((1, 2), vec![1, 0]);
        free.insert((1, 3), vec![0, 1]);
        free.insert((2, 3), vec![2, 0]);
        let a = complete_graph_solution(4, &free).unwrap();
        assert_eq!(a.edge_value(1, 4), vec![-1, -1]);
        assert_eq!(a.edge_value(2, 4), vec![-1, 0]);
        assert_eq!(a.edge_value(3, 4), vec![2, 1]);
        assert!(a.is_balanced());

        let zeros: BTreeMap<_, _> = [(1, 2), (1, 3), (2, 3)].into_iter().map(|e| (e, vec![0])).collect();
        let a = complete_graph_solution(4, &zeros).unwrap();
        assert!(a.vectors().iter().all(|v| v == &vec![0]));
    }

    #[test]
    fn triangle_parametrization() {
        let p = edge_parametrization(&LabeledGraph::cycle(3).unwrap());
        assert_eq!(p.free_edges, vec![0]);
        // z^2_1 = w, z^3_1 = -w, z^3_2 = w
        assert_eq!(p.coefficients, vec![vec![1], vec![-1], vec![1]]);
    }

    #[test]
    fn assignment_dump_format() {
        let a = assignment(3, &[((1, 2), vec![1, 0]), ((1, 3), vec![-1, 0]), ((2, 3), vec![1, 0])]);
        assert_eq!(a.to_string(), "1-2: (1,0)\n1-3: (-1,0)\n2-3: (1,0)\n");
    }
}
