//! Exponential growth rate of the cluster weights.

use super::{ClusterWeight, WeightError};

/// `|q_n| = e^{-n(βε + βδ_n)}` and `α_n = sign(q_n)` for the fitted orders.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticEstimate {
    pub beta: f64,
    /// `βε`.
    pub beta_epsilon: f64,
    /// `(n, βδ_n)`.
    pub delta_n: Vec<(usize, f64)>,
    /// `(n, α_n)`.
    pub alpha_n: Vec<(usize, i8)>,
    /// Orders beyond 2 whose weight vanished.
    pub skipped: Vec<usize>,
}

impl AsymptoticEstimate {
    pub fn epsilon(&self) -> f64 {
        self.beta_epsilon / self.beta
    }

    /// `α_n e^{-nβδ_n}` for the fitted orders.
    pub fn scaled_terms(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.delta_n
            .iter()
            .zip(&self.alpha_n)
            .map(|(&(n, d), &(_, a))| (n, f64::from(a) * (-(n as f64) * d).exp()))
    }
}

/// Least-squares fit of `-ln|q_n|/n = a + b/n + c ln(n)/n` over `n ≥ 3`;
/// `βε = a`, and `βδ_n` absorbs the remainder so the inputs are reproduced.
pub fn estimate_asymptotics(weights: &[ClusterWeight], beta: f64) -> Result<AsymptoticEstimate, WeightError> {
    if !(beta > 0.0) {
        return Err(WeightError::Domain(format!("beta must be positive, got {beta}")));
    }
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    let mut signs = Vec::new();
    for w in weights.iter().filter(|w| w.n >= 3) {
        if w.value == 0.0 || !w.value.is_finite() {
            skipped.push(w.n);
            continue;
        }
        let n = w.n as f64;
        points.push((w.n, -w.value.abs().ln() / n));
        signs.push((w.n, if w.value > 0.0 { 1 } else { -1 }));
    }
    if points.len() < 3 {
        return Err(WeightError::Domain(format!("need at least 3 nonzero weights beyond n = 2, got {}", points.len())));
    }
    let basis = |n: usize| {
        let x = n as f64;
        [1.0, 1.0 / x, x.ln() / x]
    };
    let mut ata = [[0.0f64; 3]; 3];
    let mut aty = [0.0f64; 3];
    for &(n, y) in &points {
        let b = basis(n);
        for i in 0..3 {
            aty[i] += b[i] * y;
            for j in 0..3 {
                ata[i][j] += b[i] * b[j];
            }
        }
    }
    let coef = solve3(ata, aty).ok_or_else(|| WeightError::Domain("degenerate asymptotic fit".into()))?;
    let a = coef[0];
    Ok(AsymptoticEstimate {
        beta,
        beta_epsilon: a,
        delta_n: points.iter().map(|&(n, y)| (n, y - a)).collect(),
        alpha_n: signs,
        skipped,
    })
}

fn solve3(mut m: [[f64; 3]; 3], mut r: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        r.swap(col, piv);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            r[row] -= f * r[col];
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let s: f64 = (i + 1..3).map(|k| m[i][k] * x[k]).sum();
        x[i] = (r[i] - s) / m[i][i];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::ClusterMode;
    use approx::assert_relative_eq;

    fn weight(n: usize, value: f64) -> ClusterWeight {
        ClusterWeight { n, value, mode: ClusterMode::CyclesOnly, error: 0.0, graphs: 0 }
    }

    #[test]
    fn cycles_only_gaussian_has_zero_rate() {
        for d in 1..=3 {
            let ws: Vec<_> = (1..=12)
                .map(|n| {
                    let v = if n < 3 {
                        [1.0, 0.0][n - 1]
                    } else {
                        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                        sign / (2.0 * (n as f64).powf(d as f64 / 2.0))
                    };
                    weight(n, v)
                })
                .collect();
            let est = estimate_asymptotics(&ws, 1.0).unwrap();
            assert!(est.beta_epsilon.abs() < 1e-12, "{}", est.beta_epsilon);
            for &(n, delta) in &est.delta_n {
                let x = n as f64;
                assert_relative_eq!(delta, (d as f64 / 2.0) * x.ln() / x + 2f64.ln() / x, max_relative = 1e-10);
            }
            assert!(est.alpha_n.iter().all(|&(n, a)| a == if n % 2 == 0 { 1 } else { -1 }));
        }
    }

    #[test]
    fn geometric_weights() {
        let r: f64 = 0.37;
        let ws: Vec<_> = (3..=9).map(|n| weight(n, r.powi(n as i32))).collect();
        let est = estimate_asymptotics(&ws, 2.0).unwrap();
        assert_relative_eq!(est.beta_epsilon, -r.ln(), max_relative = 1e-12);
        assert_relative_eq!(est.epsilon(), -r.ln() / 2.0, max_relative = 1e-12);
        assert!(est.delta_n.iter().all(|&(_, d)| d.abs() < 1e-12));
        assert!(est.alpha_n.iter().all(|&(_, a)| a == 1));
    }

    #[test]
    fn inputs_are_reproduced_and_zeros_skipped() {
        let ws = vec![weight(3, -0.2), weight(4, 0.0), weight(5, 0.07), weight(6, -0.01), weight(7, 0.004)];
        let est = estimate_asymptotics(&ws, 1.0).unwrap();
        assert_eq!(est.skipped, vec![4]);
        for (n, t) in est.scaled_terms() {
            let q = ws.iter().find(|w| w.n == n).unwrap().value;
            assert_relative_eq!(t * (-(n as f64) * est.beta_epsilon).exp(), q, max_relative = 1e-12);
        }
        assert!(estimate_asymptotics(&ws[..2], 1.0).is_err());
    }
}
