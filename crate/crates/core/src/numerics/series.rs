//! Summation of slowly convergent alternating series.

/// Number of terms used by the Cohen–Villegas–Zagier accelerator. The error
/// decays like 5.83^-n for totally monotone term sequences.
const CVZ_TERMS: usize = 48;

/// Sum of `Σ_{k≥0} (-1)^k a_k` by the Cohen–Villegas–Zagier algorithm.
///
/// Exact to rounding for totally monotone sequences `a_k` (moment sequences),
/// which covers `x^k (k+c)^{-s}` with `0 < x ≤ 1`, `s ≥ 0`. For such
/// sequences the result is the Abel sum even when the series diverges
/// at `s = 0`.
pub fn cvz_alternating(a: impl Fn(usize) -> f64) -> f64 {
    let n = CVZ_TERMS;
    let mut d = (3.0 + 8f64.sqrt()).powi(n as i32);
    d = 0.5 * (d + 1.0 / d);
    let mut b = -1.0;
    let mut c = -d;
    let mut s = 0.0;
    for k in 0..n {
        c = b - c;
        s += c * a(k);
        let kf = k as f64;
        let nf = n as f64;
        b = (kf + nf) * (kf - nf) * b / ((kf + 0.5) * (kf + 1.0));
    }
    s / d
}

/// Dirichlet eta function `η(s) = Σ_{n≥1} (-1)^{n-1} n^{-s}` for `s ≥ 0`.
pub fn eta(s: f64) -> f64 {
    cvz_alternating(|k| ((k + 1) as f64).powf(-s))
}

/// Riemann zeta function for `s > 1`, via `ζ(s) = η(s) / (1 - 2^{1-s})`.
pub fn zeta(s: f64) -> f64 {
    assert!(s > 1.0, "zeta requires s > 1");
    eta(s) / (1.0 - 2f64.powf(1.0 - s))
}

/// Outcome of an alternating tail evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailSum {
    Finite(f64),
    /// Terms grow without bound at `x = 1`.
    Divergent,
}

/// `Σ_{n≥start} (-1)^n n^{-s} x^n` for `0 ≤ x ≤ 1`.
///
/// Uses the accelerator when the terms are totally monotone (`s ≥ 0`);
/// otherwise sums directly, which requires `x < 1`.
pub fn alternating_power_tail(s: f64, x: f64, start: usize) -> TailSum {
    assert!((0.0..=1.0).contains(&x), "x must lie in [0, 1]");
    assert!(start >= 1);
    if x == 0.0 {
        return TailSum::Finite(0.0);
    }
    let sign0 = if start.is_multiple_of(2) { 1.0 } else { -1.0 };
    if s >= 0.0 {
        let lx = x.ln();
        let v = cvz_alternating(|k| {
            let n = (start + k) as f64;
            (n * lx - s * n.ln()).exp()
        });
        return TailSum::Finite(sign0 * v);
    }
    if x >= 1.0 {
        return TailSum::Divergent;
    }
    // Terms eventually decay geometrically; sum until they are negligible.
    let lx = x.ln();
    let mut total = 0.0;
    let mut n = start;
    let mut sign = sign0;
    let mut past_peak = false;
    loop {
        let nf = n as f64;
        let term = (nf * lx - s * nf.ln()).exp();
        total += sign * term;
        // the term sequence is unimodal in n
        if nf * (-lx) > -s {
            past_peak = true;
        }
        if past_peak && term < 1e-18 * total.abs().max(1e-300) {
            break;
        }
        if n > 50_000_000 {
            break;
        }
        sign = -sign;
        n += 1;
    }
    TailSum::Finite(total)
}

/// Result of accelerating a finite list of series terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Accelerated {
    pub sum: f64,
    /// Difference between the last two accelerated estimates.
    pub increment: f64,
    pub converged: bool,
}

/// Euler transform by iterated averaging of partial sums.
///
/// Each averaging pass replaces the partial sums by the means of neighbours;
/// the estimate is the last entry of each pass. Stops when two successive
/// estimates differ by less than `tol` (relative to the estimate, absolute
/// below one).
pub fn iterated_averaging(terms: &[f64], tol: f64) -> Accelerated {
    let mut partial: Vec<f64> = terms
        .iter()
        .scan(0.0, |acc, &t| {
            *acc += t;
            Some(*acc)
        })
        .collect();
    if partial.is_empty() {
        return Accelerated { sum: 0.0, increment: 0.0, converged: true };
    }
    let mut prev = *partial.last().unwrap();
    let mut increment = f64::INFINITY;
    while partial.len() > 1 {
        partial = partial.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let est = *partial.last().unwrap();
        increment = (est - prev).abs();
        if increment <= tol * est.abs().max(1.0) {
            return Accelerated { sum: est, increment, converged: true };
        }
        prev = est;
    }
    Accelerated { sum: prev, increment, converged: false }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta_known_values() {
        assert!((eta(1.0) - std::f64::consts::LN_2).abs() < 1e-14);
        assert!((eta(1.5) - 0.765_147_024_625_407_9).abs() < 1e-14);
        // Abel sum of 1 - 1 + 1 - ...
        assert!((eta(0.0) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn zeta_known_values() {
        let pi = std::f64::consts::PI;
        assert!((zeta(2.0) - pi * pi / 6.0).abs() < 1e-13);
        assert!((zeta(1.5) - 2.612_375_348_685_488).abs() < 1e-12);
    }

    #[test]
    fn geometric_tail_closed_form() {
        // Σ_{n≥3} (-1)^n x^n = -x^3 / (1 + x)
        for &x in &[0.1, 0.5, 0.9, 1.0] {
            let TailSum::Finite(v) = alternating_power_tail(0.0, x, 3) else { panic!() };
            assert!((v + x * x * x / (1.0 + x)).abs() < 1e-14, "x={x}");
        }
    }

    #[test]
    fn negative_exponent_direct_sum() {
        // Σ_{n≥1} (-1)^n n x^n = -x / (1 + x)^2
        let x = 0.97;
        let TailSum::Finite(v) = alternating_power_tail(-1.0, x, 1) else { panic!() };
        assert!((v + x / ((1.0 + x) * (1.0 + x))).abs() < 1e-12);
        assert_eq!(alternating_power_tail(-0.5, 1.0, 3), TailSum::Divergent);
    }

    #[test]
    fn averaging_sums_log2_series() {
        let terms: Vec<f64> = (1..=60).map(|n| if n % 2 == 1 { 1.0 } else { -1.0 } / n as f64).collect();
        let acc = iterated_averaging(&terms, 1e-12);
        assert!(acc.converged);
        assert!((acc.sum - std::f64::consts::LN_2).abs() < 1e-11);
    }
}
