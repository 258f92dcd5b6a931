//! Exact integer and rational linear algebra for small matrices.

use num_rational::Ratio;
use num_traits::{One, Zero};

/// Determinant of a square integer matrix by fraction-free (Bareiss) elimination.
///
/// Every intermediate value is a minor of the input, so the computation is
/// exact as long as those minors fit in `i128`.
pub fn det_bareiss(mut a: Vec<Vec<i128>>) -> i128 {
    let n = a.len();
    if n == 0 {
        return 1;
    }
    debug_assert!(a.iter().all(|row| row.len() == n));
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&r| a[r][k] != 0) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

pub type Rational = Ratio<i64>;

/// Reduced row echelon form over the rationals.
///
/// Columns are scanned in the order given by `column_order`; the returned
/// pivot list holds `(row, column)` pairs in that order.
pub fn rref(rows: &[Vec<i64>], column_order: &[usize]) -> (Vec<Vec<Rational>>, Vec<(usize, usize)>) {
    let mut m: Vec<Vec<Rational>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| Rational::from_integer(x)).collect())
        .collect();
    let mut pivots = Vec::new();
    let mut row = 0;
    for &col in column_order {
        if row == m.len() {
            break;
        }
        let Some(p) = (row..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        let inv = Rational::one() / m[row][col];
        for x in m[row].iter_mut() {
            *x *= inv;
        }
        for r in 0..m.len() {
            if r != row && !m[r][col].is_zero() {
                let f = m[r][col];
                let pivot_row = m[row].clone();
                for (x, y) in m[r].iter_mut().zip(pivot_row) {
                    *x -= f * y;
                }
            }
        }
        pivots.push((row, col));
        row += 1;
    }
    (m, pivots)
}

/// Rank of an integer matrix over the rationals.
pub fn rank(rows: &[Vec<i64>]) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let order: Vec<usize> = (0..cols).collect();
    rref(rows, &order).1.len()
}

/// Converts a rational known to be integral.
pub fn to_integer(x: &Rational) -> Option<i64> {
    x.is_integer().then(|| x.to_integer())
}

/// Largest absolute entry, used for sanity checks on parametrizations.
pub fn max_abs(rows: &[Vec<i64>]) -> i64 {
    rows.iter().flatten().map(|x| x.abs()).max().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bareiss_matches_cofactor_expansion() {
        let a = vec![vec![2, -1, 0], vec![-1, 2, -1], vec![0, -1, 2]];
        assert_eq!(det_bareiss(a), 4);
        let b = vec![vec![0, 1], vec![1, 0]];
        assert_eq!(det_bareiss(b), -1);
        let c = vec![vec![1, 2], vec![2, 4]];
        assert_eq!(det_bareiss(c), 0);
        assert_eq!(det_bareiss(vec![]), 1);
    }

    #[test]
    fn rank_of_triangle_incidence() {
        let m = vec![vec![-1, -1, 0], vec![1, 0, -1], vec![0, 1, 1]];
        assert_eq!(rank(&m), 2);
    }
}
