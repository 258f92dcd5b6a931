//! Spanning-tree counts and cycle-space Gram determinants.

use super::{CycleBasis, GraphError, LabeledGraph};
use crate::numerics::linalg::det_bareiss;

/// Number of spanning trees, as the determinant of the Laplacian with the
/// row and column of vertex 1 removed (exact integer arithmetic).
pub fn count_spanning_trees(g: &LabeledGraph) -> Result<u128, GraphError> {
    if !g.is_connected() {
        return Err(GraphError::Disconnected);
    }
    let n = g.n();
    if n <= 1 {
        return Ok(1);
    }
    let mut lap = vec![vec![0i128; n - 1]; n - 1];
    for &(i, j) in g.edges() {
        for v in [i, j] {
            if v > 1 {
                lap[v - 2][v - 2] += 1;
            }
        }
        if i > 1 && j > 1 {
            lap[i - 2][j - 2] -= 1;
            lap[j - 2][i - 2] -= 1;
        }
    }
    let det = det_bareiss(lap);
    debug_assert!(det > 0);
    Ok(det as u128)
}

/// `det(CᵀC)` of the cycle-basis coefficient matrix.
pub fn gram_determinant(basis: &CycleBasis) -> u128 {
    let c = basis.coefficients();
    let k = basis.free_count();
    let mut gram = vec![vec![0i128; k]; k];
    for row in c {
        for a in 0..k {
            if row[a] == 0 {
                continue;
            }
            for b in 0..k {
                gram[a][b] += i128::from(row[a]) * i128::from(row[b]);
            }
        }
    }
    let det = det_bareiss(gram);
    debug_assert!(det >= 0);
    det as u128
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::cycle_basis;

    #[test]
    fn spanning_tree_examples() {
        assert_eq!(count_spanning_trees(&LabeledGraph::cycle(5).unwrap()).unwrap(), 5);
        assert_eq!(count_spanning_trees(&LabeledGraph::complete(4)).unwrap(), 16);
        let diamond = LabeledGraph::new(4, [(1, 2), (1, 3), (1, 4), (2, 3), (3, 4)]).unwrap();
        assert_eq!(count_spanning_trees(&diamond).unwrap(), 8);
        assert_eq!(count_spanning_trees(&LabeledGraph::complete(6)).unwrap(), 6u128.pow(4));
        assert!(count_spanning_trees(&LabeledGraph::empty(3)).is_err());
    }

    #[test]
    fn gram_equals_tree_count_on_examples() {
        for g in [LabeledGraph::complete(4), LabeledGraph::complete(5), LabeledGraph::cycle(7).unwrap()] {
            let b = cycle_basis(&g).unwrap();
            assert_eq!(gram_determinant(&b), count_spanning_trees(&g).unwrap());
        }
    }
}
