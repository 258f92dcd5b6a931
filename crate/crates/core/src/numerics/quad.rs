//! Gauss–Legendre quadrature.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and its derivative
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss–Legendre rule with equal panels.
#[derive(Debug, Clone)]
pub struct CompositeRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    panels: usize,
}

impl CompositeRule {
    pub fn new(order: usize, panels: usize) -> Self {
        let (nodes, weights) = gauss_legendre(order);
        Self { nodes, weights, panels: panels.max(1) }
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let h = (b - a) / self.panels as f64;
        let mut total = 0.0;
        for p in 0..self.panels {
            let lo = a + p as f64 * h;
            let mid = lo + 0.5 * h;
            let panel: f64 = self
                .nodes
                .iter()
                .zip(&self.weights)
                .map(|(&x, &w)| w * f(mid + 0.5 * h * x))
                .sum();
            total += 0.5 * h * panel;
        }
        total
    }
}

/// Bessel function `J0`. Small arguments use the periodic integral
/// `J0(x) = (1/2π) ∫_0^{2π} cos(x sin θ) dθ` with the trapezoidal rule, large
/// ones the Hankel asymptotic expansion.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x > 25.0 {
        return bessel_j0_asymptotic(x);
    }
    let m = 64 + (2.0 * x) as usize;
    let h = 2.0 * PI / m as f64;
    (0..m).map(|k| (x * (k as f64 * h).sin()).cos()).sum::<f64>() / m as f64
}

fn bessel_j0_asymptotic(x: f64) -> f64 {
    // a_k = Π_{j=1..k} (2j-1)² / (k! 8^k); P takes the even k, Q the odd
    let mut p = 0.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut prev = f64::INFINITY;
    for k in 0..40 {
        let term = a / x.powi(k);
        if term >= prev {
            break;
        }
        prev = term;
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * term;
        } else {
            q -= sign * term;
        }
        let next = (2 * k + 1) as f64;
        a *= next * next / ((k + 1) as f64 * 8.0);
    }
    let phase = x - PI / 4.0;
    (2.0 / (PI * x)).sqrt() * (p * phase.cos() - q * phase.sin())
}

/// Surface area of the unit sphere in `d` dimensions.
pub fn unit_sphere_area(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => {
            // 2 π^{d/2} / Γ(d/2), Γ by recurrence on half-integers
            let half = d as f64 / 2.0;
            let mut gamma = if d.is_multiple_of(2) { 1.0 } else { PI.sqrt() };
            let mut g = if d.is_multiple_of(2) { 1.0 } else { 0.5 };
            while g < half {
                gamma *= g;
                g += 1.0;
            }
            2.0 * PI.powf(half) / gamma
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn composite_gaussian_integral() {
        let rule = CompositeRule::new(16, 8);
        let v = rule.integrate(-8.0, 8.0, |x| (-PI * x * x).exp());
        assert!((v - 1.0).abs() < 1e-13);
    }

    #[test]
    fn j0_reference_values() {
        assert!((bessel_j0(0.0) - 1.0).abs() < 1e-15);
        assert!((bessel_j0(1.0) - 0.765_197_686_557_966_6).abs() < 1e-14);
        assert!((bessel_j0(10.0) + 0.245_935_764_451_348_3).abs() < 1e-13);
        assert!((bessel_j0(30.0) + 0.086_367_983_581_040_23).abs() < 1e-13);
        assert!((bessel_j0(100.0) - 0.019_985_850_304_223_122).abs() < 1e-14);
    }

    #[test]
    fn sphere_areas() {
        assert!((unit_sphere_area(4) - 2.0 * PI * PI).abs() < 1e-12);
        assert!((unit_sphere_area(5) - 8.0 * PI * PI / 3.0).abs() < 1e-12);
    }
}
