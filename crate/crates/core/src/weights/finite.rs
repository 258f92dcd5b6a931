//! Finite-volume weights `q_n^L` from constrained lattice sums over the
//! Fourier coefficients `Ê_L(z)`.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::{factorial, ClusterMode, ClusterWeight, WeightError};
use crate::graph::{Atlas, LabeledGraph};
use crate::momentum::edge_parametrization;
use crate::potential::{EHatTable, PeriodizedPotential};

/// Largest number of lattice points visited by one sum.
const MAX_TERMS: u128 = 4_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSum {
    pub value: f64,
    /// Bound on the terms with a free variable outside the cutoff, plus the
    /// propagated table error.
    pub tail_bound: f64,
    pub terms: u64,
}

/// `Σ_{m > zmax} e^{-a m²}`.
fn gaussian_tail_1d(a: f64, zmax: i64) -> f64 {
    let mut total = 0.0;
    let mut m = zmax + 1;
    loop {
        let t = (-a * (m * m) as f64).exp();
        total += t;
        if t < 1e-300 || t < 1e-18 * total {
            break;
        }
        m += 1;
    }
    total
}

/// Bound on `Σ_{|z|_∞ > zmax} |Ê_L(z)|` for the Gaussian example, using
/// `|Ê_L(z)| ≤ (λ/L)^d e^{-π λ² z²/L²}` plus the overlap correction.
fn gaussian_coefficient_tail(lambda: f64, l: f64, d: usize, zmax: i64) -> f64 {
    let a = PI * lambda * lambda / (l * l);
    let theta = 1.0 + 2.0 * gaussian_tail_1d(a, 0);
    let amp = (lambda / l).powi(d as i32) * 1.01;
    amp * 2.0 * d as f64 * gaussian_tail_1d(a, zmax) * theta.powi(d as i32 - 1)
}

/// Smallest cutoff whose coefficient tail for the Gaussian example is below
/// `tol`.
pub fn default_zmax(lambda: f64, l: f64, d: usize, tol: f64) -> i64 {
    let mut z = 1;
    while gaussian_coefficient_tail(lambda, l, d, z) >= tol && z < 1 << 20 {
        z += 1;
    }
    z
}

/// `Σ Π_e Ê_L(z_e)` over edge vectors satisfying every vertex constraint,
/// optionally restricted to nonzero edge vectors, with all free variables in
/// `[-zmax, zmax]^d`.
pub fn constrained_lattice_sum(
    g: &LabeledGraph,
    table: &EHatTable,
    zmax: i64,
    nonzero: bool,
    lambda: Option<f64>,
    l: f64,
) -> Result<LatticeSum, WeightError> {
    let d = table.d();
    let param = edge_parametrization(g);
    let k = param.free_edges.len();
    let coeffs = &param.coefficients;
    let reach = coeffs.iter().map(|row| row.iter().map(|c| c.abs()).sum::<i64>()).max().unwrap_or(0) * zmax;
    if reach > table.range() {
        return Err(WeightError::Domain(format!(
            "coefficient table reaches |z| = {} but {reach} is needed",
            table.range()
        )));
    }
    let side = (2 * zmax + 1) as u128;
    let dims = (k * d) as u32;
    let total = side.pow(dims);
    if total > MAX_TERMS {
        return Err(WeightError::Capacity(format!("{total} lattice terms exceed {MAX_TERMS}")));
    }
    let e_count = coeffs.len();
    let eval = |w: &[i64], z: &mut Vec<i64>| -> f64 {
        let mut prod = 1.0;
        for row in coeffs {
            let mut all_zero = true;
            for (c, zc) in z.iter_mut().enumerate() {
                *zc = row.iter().enumerate().map(|(j, &cj)| cj * w[j * d + c]).sum();
                all_zero &= *zc == 0;
            }
            if nonzero && all_zero {
                return 0.0;
            }
            prod *= table.get(z).expect("within table range");
        }
        prod
    };
    let value = if dims == 0 {
        eval(&[], &mut vec![0i64; d])
    } else {
        let chunks: Vec<f64> = (-zmax..=zmax)
            .into_par_iter()
            .map(|first| {
                let mut w = vec![-zmax; dims as usize];
                w[0] = first;
                let mut z = vec![0i64; d];
                let mut acc = 0.0;
                loop {
                    acc += eval(&w, &mut z);
                    // odometer over the remaining coordinates
                    let mut pos = dims as usize - 1;
                    loop {
                        if pos == 0 {
                            return acc;
                        }
                        if w[pos] < zmax {
                            w[pos] += 1;
                            break;
                        }
                        w[pos] = -zmax;
                        pos -= 1;
                    }
                }
            })
            .collect();
        chunks.iter().sum()
    };
    // Σ_{z ≠ 0} |Ê_L(z)| inside the cutoff, to bound the truncated terms
    let inside: f64 = crate::potential::cube(d, zmax)
        .filter(|z| z.iter().any(|&c| c != 0))
        .map(|z| table.get(&z).unwrap().abs())
        .sum();
    let outside = match lambda {
        Some(lam) => gaussian_coefficient_tail(lam, l, d, zmax),
        None => {
            // no analytic decay: twice the outermost shell as an estimate
            2.0 * crate::potential::cube(d, zmax)
                .filter(|z| z.iter().any(|&c| c.abs() == zmax))
                .map(|z| table.get(&z).unwrap().abs())
                .sum::<f64>()
        }
    };
    let tail = if k == 0 { 0.0 } else { k as f64 * outside * (inside + outside).powi(k as i32 - 1) };
    let table_error = total as f64 * e_count as f64 * table.error_bound;
    Ok(LatticeSum { value, tail_bound: tail + table_error, terms: total as u64 })
}

/// `q_n^L` for `n ≤ 4`:
/// `L^{d(n-1)} / (λ_β^{d(n-1)} (n-1)!) Σ_C Ê_L(0)^{C(n,2)-|E|} Σ_{z ≠ 0} Π_e Ê_L(z_e) Π_k δ_{Z_k,0}`.
#[allow(non_snake_case)]
pub fn q_n_finite_L(
    n: usize,
    p: &PeriodizedPotential,
    table: &EHatTable,
    lambda_beta: f64,
    zmax: i64,
    tol: f64,
) -> Result<ClusterWeight, WeightError> {
    if let Some(w) = ClusterWeight::trivial(n, ClusterMode::FiniteL) {
        return Ok(w);
    }
    if !(3..=4).contains(&n) {
        return Err(WeightError::Capacity(format!("finite-volume weights are implemented for n ≤ 4, got {n}")));
    }
    let d = table.d();
    if !(1..=2).contains(&d) {
        return Err(WeightError::Unsupported(format!("finite-volume weights in d = {d}")));
    }
    let lambda = p.base().gaussian_length();
    let e0 = table.get(&vec![0; d]).unwrap();
    let pairs = n * (n - 1) / 2;
    let mut sum = 0.0;
    let mut err = 0.0;
    let mut graphs = 0;
    for g in Atlas::default().enumerate_valid(n, None)? {
        let s = constrained_lattice_sum(&g, table, zmax, true, lambda, p.l())?;
        let factor = e0.powi((pairs - g.edge_count()) as i32);
        sum += factor * s.value;
        err += factor.abs() * s.tail_bound;
        graphs += 1;
    }
    let prefactor = (p.l() / lambda_beta).powi((d * (n - 1)) as i32) / factorial(n - 1);
    let error = prefactor * err;
    if !(error <= tol) {
        return Err(WeightError::Accuracy { estimate: error, tol });
    }
    Ok(ClusterWeight { n, value: prefactor * sum, mode: ClusterMode::FiniteL, error, graphs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{EHatPath, GaussianExample, ZeroPotential};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn setup(l: f64, zr: i64) -> (PeriodizedPotential, EHatTable) {
        let p = PeriodizedPotential::new(Arc::new(GaussianExample::new(1.0).unwrap()), l, 1.0).unwrap();
        let t = EHatTable::build(&p, 1, zr, EHatPath::Unfolded, 1e-10).unwrap();
        (p, t)
    }

    #[test]
    fn triangle_reduces_to_cubes() {
        let (p, t) = setup(8.0, 64);
        let w = q_n_finite_L(3, &p, &t, 1.0, 64, 1e-10).unwrap();
        let direct: f64 = (-64..=64i64).filter(|&z| z != 0).map(|z| t.get(&[z]).unwrap().powi(3)).sum::<f64>() * 32.0;
        assert_relative_eq!(w.value, direct, max_relative = 1e-14);
        assert_relative_eq!(w.value, -0.226_175_134_594_81, max_relative = 1e-11);
    }

    #[test]
    fn converges_towards_thermodynamic_weight() {
        let q3 = -1.0 / (2.0 * 3f64.sqrt());
        let mut gaps = Vec::new();
        for l in [4.0, 8.0, 16.0, 32.0] {
            let zmax = default_zmax(1.0, l, 1, 1e-13);
            let (p, t) = setup(l, zmax);
            let w = q_n_finite_L(3, &p, &t, 1.0, zmax, 1e-7).unwrap();
            gaps.push((w.value - q3).abs());
            // Poisson summation of the unfolded cubes
            let predicted = 0.5 / l - (-PI * l * l / 3.0).exp() / 3f64.sqrt();
            assert!((w.value - q3 - predicted).abs() < 1e-10);
        }
        assert!(gaps.windows(2).all(|g| g[1] < g[0]));
    }

    #[test]
    fn zero_potential_has_no_finite_clusters() {
        let p = PeriodizedPotential::new(Arc::new(ZeroPotential), 5.0, 1.0).unwrap();
        let t = EHatTable::build(&p, 1, 30, EHatPath::Unfolded, 1e-12).unwrap();
        for n in [3, 4] {
            assert_eq!(q_n_finite_L(n, &p, &t, 1.0, 10, 1e-10).unwrap().value, 0.0);
        }
    }

    #[test]
    fn short_cutoff_is_flagged() {
        let (p, t) = setup(8.0, 64);
        assert!(matches!(q_n_finite_L(3, &p, &t, 1.0, 4, 1e-10), Err(WeightError::Accuracy { .. })));
    }

    #[test]
    fn four_point_weight_uses_all_graphs() {
        let zmax = 20;
        let (p, t) = setup(6.0, 3 * zmax);
        let w = q_n_finite_L(4, &p, &t, 1.0, zmax, 1e-8).unwrap();
        assert_eq!(w.graphs, 10);
        assert!(w.value.is_finite());
    }
}
