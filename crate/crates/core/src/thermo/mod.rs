//! Density equation `ρλ_β^d = A(μ) = Σ_n q_n e^{n(βμ - ρv̂(0))}`, its
//! convergence boundary and the critical density.
//!
//! Everything is computed in the series variable `a = e^{βμ - ρv̂(0)}`, so
//! `μ → -∞` is simply `a → 0`.

mod example;

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::numerics::series::iterated_averaging;
use crate::potential::PairPotential;
use crate::weights::{estimate_asymptotics, ClusterMode, ClusterWeight, WeightError};

pub use example::{example_B, example_consistency, example_dB};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThermoError {
    #[error("{0}")]
    Domain(String),
    #[error("divergent: {0}")]
    Divergent(String),
    #[error("inconsistent weights: {0}")]
    Inconsistent(String),
    #[error("thermodynamic stability violated: {0}")]
    Stability(String),
    #[error(transparent)]
    Weights(#[from] WeightError),
}

/// Where the cluster weights come from.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSource {
    /// `q_n = 0` for `n ≥ 2`.
    Ideal,
    /// Cycles-only Gaussian example, summed in closed form.
    CyclesOnlyGaussian { lambda: f64 },
    /// Explicit `q_1, q_2, ...`.
    Table { weights: Vec<f64> },
}

impl WeightSource {
    pub fn from_weights(weights: &[ClusterWeight]) -> Result<Self, ThermoError> {
        let mut sorted: Vec<&ClusterWeight> = weights.iter().collect();
        sorted.sort_by_key(|w| w.n);
        if sorted.iter().enumerate().any(|(i, w)| w.n != i + 1) {
            return Err(ThermoError::Domain("weights must cover n = 1, 2, ... without gaps".into()));
        }
        Ok(WeightSource::Table { weights: sorted.iter().map(|w| w.value).collect() })
    }

    pub fn label(&self) -> String {
        match self {
            WeightSource::Ideal => "ideal".into(),
            WeightSource::CyclesOnlyGaussian { lambda } => format!("cycles-only-gaussian{{lambda={lambda}}}"),
            WeightSource::Table { weights } => format!("table{{n_max={}}}", weights.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermoState {
    pub rho: f64,
    pub beta: f64,
    pub lambda_beta: f64,
    pub d: usize,
    pub vhat0: f64,
    pub source: WeightSource,
    /// Series truncation for table sources.
    pub n_max: usize,
}

impl ThermoState {
    pub fn new(rho: f64, beta: f64, lambda_beta: f64, d: usize, vhat0: f64, source: WeightSource) -> Result<Self, ThermoError> {
        if !(rho >= 0.0 && rho.is_finite()) {
            return Err(ThermoError::Domain(format!("density must be nonnegative, got {rho}")));
        }
        if !(beta > 0.0 && beta.is_finite()) || !(lambda_beta > 0.0 && lambda_beta.is_finite()) {
            return Err(ThermoError::Domain("beta and the thermal wavelength must be positive".into()));
        }
        if d == 0 {
            return Err(ThermoError::Domain("dimension must be positive".into()));
        }
        if !(rho * lambda_beta.powi(d as i32)).is_finite() {
            return Err(ThermoError::Domain("ρλ_β^d must be finite".into()));
        }
        Ok(Self { rho, beta, lambda_beta, d, vhat0, source, n_max: 64 })
    }

    /// The cycles-only Gaussian example, `v̂(0) = λ^d`.
    pub fn example(rho: f64, beta: f64, lambda: f64, lambda_beta: f64, d: usize) -> Result<Self, ThermoError> {
        Self::new(rho, beta, lambda_beta, d, lambda.powi(d as i32), WeightSource::CyclesOnlyGaussian { lambda })
    }

    pub fn with_rho(&self, rho: f64) -> Result<Self, ThermoError> {
        let mut s = Self::new(rho, self.beta, self.lambda_beta, self.d, self.vhat0, self.source.clone())?;
        s.n_max = self.n_max;
        Ok(s)
    }

    fn lambda_d(&self) -> f64 {
        self.lambda_beta.powi(self.d as i32)
    }

    /// `ρλ_β^d`.
    pub fn target(&self) -> f64 {
        self.rho * self.lambda_d()
    }

    /// `a = e^{βμ - ρv̂(0)}`.
    pub fn activity_variable(&self, mu: f64) -> f64 {
        (self.beta * mu - self.rho * self.vhat0).exp()
    }

    pub fn mu_from_a(&self, a: f64) -> f64 {
        (a.ln() + self.rho * self.vhat0) / self.beta
    }

    fn table(&self) -> Option<&[f64]> {
        match &self.source {
            WeightSource::Table { weights } => Some(&weights[..weights.len().min(self.n_max)]),
            _ => None,
        }
    }

    /// `s^d = (λ/λ_β)^d` for the example.
    fn example_scale(&self) -> Option<f64> {
        match self.source {
            WeightSource::CyclesOnlyGaussian { lambda } => Some((lambda / self.lambda_beta).powi(self.d as i32)),
            _ => None,
        }
    }
}

/// Series radius in the variable `a`, `+∞` for entire series.
fn a_max(state: &ThermoState) -> Result<f64, ThermoError> {
    match &state.source {
        WeightSource::Ideal => Ok(f64::INFINITY),
        WeightSource::CyclesOnlyGaussian { .. } => Ok(1.0 / state.example_scale().unwrap()),
        WeightSource::Table { .. } => {
            let q = state.table().unwrap();
            if q.iter().skip(2).all(|&v| v == 0.0) {
                return Ok(f64::INFINITY);
            }
            let ws: Vec<ClusterWeight> = q
                .iter()
                .enumerate()
                .map(|(i, &v)| ClusterWeight { n: i + 1, value: v, mode: ClusterMode::Full, error: 0.0, graphs: 0 })
                .collect();
            Ok(estimate_asymptotics(&ws, state.beta)?.beta_epsilon.exp())
        }
    }
}

/// Value of a finite series with a geometric estimate of the remainder.
fn table_series(q: &[f64], a: f64, weight_by_n: bool) -> f64 {
    let terms: Vec<f64> = q
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let n = (i + 1) as f64;
            let t = v * a.powi(i as i32 + 1);
            if weight_by_n {
                n * t
            } else {
                t
            }
        })
        .collect();
    let sum: f64 = terms.iter().sum();
    let tail: Vec<f64> = terms.iter().rev().filter(|t| **t != 0.0).take(3).copied().collect();
    if tail.len() == 3 {
        let r = tail[0] / tail[1];
        if r.abs() < 1.0 && (tail[1] / tail[2]).abs() < 1.0 {
            return sum + tail[0] * r / (1.0 - r);
        }
    }
    sum
}

/// `A` as a function of the series variable, for `0 ≤ a ≤ a_max`.
pub fn a_series_at(state: &ThermoState, a: f64) -> Result<f64, ThermoError> {
    if a == 0.0 {
        return Ok(0.0);
    }
    let amax = a_max(state)?;
    if a > amax {
        return Err(ThermoError::Divergent(format!("a = {a} lies beyond the radius {amax}")));
    }
    match &state.source {
        WeightSource::Ideal => Ok(a),
        WeightSource::CyclesOnlyGaussian { .. } => {
            let sd = state.example_scale().unwrap();
            let gamma = -(sd * a).ln().min(0.0);
            Ok(example_B(gamma, state.d)? / sd)
        }
        WeightSource::Table { .. } => {
            let q = state.table().unwrap();
            if a == amax {
                return match a_bar(state)? {
                    ABar::Finite(v) => Ok(v),
                    ABar::Divergent => Err(ThermoError::Divergent("series diverges at its radius".into())),
                };
            }
            Ok(table_series(q, a, false))
        }
    }
}

/// `A_{ρ,β}(μ)`; zero as `μ → -∞`.
#[allow(non_snake_case)]
pub fn A_series(mu: f64, state: &ThermoState) -> Result<f64, ThermoError> {
    if mu == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    a_series_at(state, state.activity_variable(mu))
}

/// `S = Σ n q_n a^n = a dA/da`.
fn s_series_at(state: &ThermoState, a: f64) -> Result<f64, ThermoError> {
    match &state.source {
        WeightSource::Ideal => Ok(a),
        WeightSource::CyclesOnlyGaussian { .. } => {
            let sd = state.example_scale().unwrap();
            let gamma = -(sd * a).ln().min(0.0);
            Ok(-example_dB(gamma, state.d)? / sd)
        }
        WeightSource::Table { .. } => Ok(table_series(state.table().unwrap(), a, true)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuBar {
    Finite(f64),
    /// The series is entire.
    Infinite,
}

/// `μ̄ = ε + ρv̂(0)/β`, the boundary of convergence.
pub fn mu_bar(state: &ThermoState) -> Result<MuBar, ThermoError> {
    let amax = a_max(state)?;
    if amax.is_infinite() {
        return Ok(MuBar::Infinite);
    }
    Ok(MuBar::Finite(state.mu_from_a(amax)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ABar {
    Finite(f64),
    Divergent,
}

/// `Ā_β = A` at `μ = μ̄`, independent of `ρ`.
pub fn a_bar(state: &ThermoState) -> Result<ABar, ThermoError> {
    let amax = a_max(state)?;
    if amax.is_infinite() {
        return Ok(ABar::Divergent);
    }
    match &state.source {
        WeightSource::Ideal => Ok(ABar::Divergent),
        WeightSource::CyclesOnlyGaussian { .. } => Ok(ABar::Finite(example_B(0.0, state.d)? / state.example_scale().unwrap())),
        WeightSource::Table { .. } => {
            let q = state.table().unwrap();
            let terms: Vec<f64> = q.iter().enumerate().map(|(i, &v)| v * amax.powi(i as i32 + 1)).collect();
            let tail: Vec<f64> = terms.iter().rev().filter(|t| **t != 0.0).take(8).copied().collect();
            let alternating = tail.windows(2).all(|w| w[0] * w[1] < 0.0);
            if alternating {
                let acc = iterated_averaging(&terms, 1e-12);
                return Ok(if acc.converged { ABar::Finite(acc.sum) } else { ABar::Divergent });
            }
            // single-signed tail: needs terms shrinking faster than 1/n
            if tail.len() >= 2 {
                let n = terms.len() as f64;
                let ratio = (tail[0] / tail[1]).abs();
                if ratio >= 1.0 - 1.0 / n {
                    return Ok(ABar::Divergent);
                }
            }
            Ok(ABar::Finite(table_series(q, amax * (1.0 - 1e-15), false)))
        }
    }
}

/// `ρ_c = Ā_β/λ_β^d`, `+∞` when `Ā_β` diverges.
pub fn rho_c(state: &ThermoState) -> Result<f64, ThermoError> {
    Ok(match a_bar(state)? {
        ABar::Finite(v) => v / state.lambda_d(),
        ABar::Divergent => f64::INFINITY,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Regime {
    FiniteClusters,
    Critical,
    InfiniteClusters,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::FiniteClusters => "finite-clusters",
            Regime::Critical => "critical",
            Regime::InfiniteClusters => "infinite-clusters",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveResult {
    pub mu: f64,
    /// Series variable at the solution.
    pub a: f64,
    pub regime: Regime,
    /// `|A(μ) - ρλ_β^d|`.
    pub residual: f64,
    pub rho_c: f64,
    pub infinite_cluster_density: f64,
}

const SOLVE_RTOL: f64 = 1e-10;
const GRID: usize = 32;

/// Solves the density equation for `μ`.
pub fn solve_mu(state: &ThermoState) -> Result<SolveResult, ThermoError> {
    let rc = rho_c(state)?;
    if state.rho == 0.0 {
        return Ok(SolveResult {
            mu: f64::NEG_INFINITY,
            a: 0.0,
            regime: Regime::FiniteClusters,
            residual: 0.0,
            rho_c: rc,
            infinite_cluster_density: 0.0,
        });
    }
    let target = state.target();
    let amax = a_max(state)?;
    // upper end of the bracket: stop 1e-12 short of μ̄ in μ
    let mut hi = if amax.is_finite() { amax * (-state.beta * 1e-12).exp() } else { target.max(1.0) };
    if amax.is_infinite() {
        while a_series_at(state, hi)? < target {
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(ThermoError::Inconsistent("A stays below the target on the whole axis".into()));
            }
        }
    }
    // monotonicity on a grid spanning the bracket
    let mut prev = 0.0;
    for j in 1..=GRID {
        let a = hi * (j as f64 / GRID as f64).powi(2);
        let v = a_series_at(state, a)?;
        if !(v > prev) {
            return Err(ThermoError::Inconsistent(format!("A is not increasing near a = {a:.6e}")));
        }
        prev = v;
    }
    if let ABar::Finite(abar) = a_bar(state)? {
        if (target - abar).abs() <= SOLVE_RTOL * target || target > abar {
            let regime = if target > abar * (1.0 + SOLVE_RTOL) { Regime::InfiniteClusters } else { Regime::Critical };
            let excess = if regime == Regime::InfiniteClusters { state.rho - rc } else { 0.0 };
            return Ok(SolveResult {
                mu: state.mu_from_a(amax),
                a: amax,
                regime,
                residual: (abar - target).abs(),
                rho_c: rc,
                infinite_cluster_density: excess,
            });
        }
    }
    let f_hi = a_series_at(state, hi)? - target;
    if f_hi < 0.0 {
        return Err(ThermoError::Inconsistent(
            "A stays below ρλ_β^d up to the radius although Ā_β exceeds it".into(),
        ));
    }
    let (a, residual) = bracket_root(|a| a_series_at(state, a).map(|v| v - target), 0.0, -target, hi, f_hi, SOLVE_RTOL * 1e-3 * target)?;
    Ok(SolveResult {
        mu: state.mu_from_a(a),
        a,
        regime: Regime::FiniteClusters,
        residual,
        rho_c: rc,
        infinite_cluster_density: 0.0,
    })
}

/// Bisection safeguarded secant (Illinois) on a sign-changing bracket.
fn bracket_root(
    f: impl Fn(f64) -> Result<f64, ThermoError>,
    mut lo: f64,
    mut f_lo: f64,
    mut hi: f64,
    mut f_hi: f64,
    ftol: f64,
) -> Result<(f64, f64), ThermoError> {
    let mut side = 0i8;
    let mut best = if f_lo.abs() < f_hi.abs() { (lo, f_lo) } else { (hi, f_hi) };
    for it in 0..400 {
        let secant = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        let mid = 0.5 * (lo + hi);
        // fall back to bisection every fourth step or when the secant leaves the bracket
        let x = if it % 4 == 3 || !(secant > lo && secant < hi) { mid } else { secant };
        let fx = f(x)?;
        if fx.abs() < best.1.abs() {
            best = (x, fx);
        }
        if fx.abs() <= ftol || hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        if fx < 0.0 {
            lo = x;
            f_lo = fx;
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            f_hi = fx;
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        }
    }
    Ok((best.0, best.1.abs()))
}

/// `∂²f/∂ρ² = λ_β^d / (β Σ n q_n a^n) + v̂(0)/β`.
pub fn f_second_derivative(state: &ThermoState, mu: f64) -> Result<f64, ThermoError> {
    let a = state.activity_variable(mu);
    if let Some(amax) = a_max(state).ok().filter(|m| m.is_finite()) {
        if a > amax * (1.0 + 1e-12) {
            return Err(ThermoError::Divergent("μ lies beyond the convergence boundary".into()));
        }
    }
    let s = s_series_at(state, a)?;
    if !(s > 0.0) {
        return Err(ThermoError::Stability(format!("Σ n q_n a^n = {s:e} is not positive")));
    }
    Ok(state.lambda_d() / (state.beta * s) + state.vhat0 / state.beta)
}

/// `∂p/∂ρ = ρ ∂²f/∂ρ²`.
pub fn dp_drho(state: &ThermoState, mu: f64) -> Result<f64, ThermoError> {
    Ok(state.rho * f_second_derivative(state, mu)?)
}

/// Centered difference of the solved `μ(ρ)` with step `h·ρ`.
pub fn mu_slope_fd(state: &ThermoState, h: f64) -> Result<f64, ThermoError> {
    let step = h * state.rho;
    let up = solve_mu(&state.with_rho(state.rho + step)?)?;
    let down = solve_mu(&state.with_rho(state.rho - step)?)?;
    Ok((up.mu - down.mu) / (2.0 * step))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivityBounds {
    pub activity: f64,
    /// `ρλ_β^d`, asserted only for nonnegative potentials.
    pub lower: Option<f64>,
    /// `ρλ_β^d e^{βρ∫u}`, skipped when `∫u` is unavailable.
    pub upper: Option<f64>,
    pub notices: Vec<String>,
    pub holds: bool,
}

/// Checks `ρλ_β^d ≤ e^{βμ} ≤ ρλ_β^d e^{βρ∫u dx}` at the given `μ`.
pub fn activity_bounds_check(state: &ThermoState, mu: f64, potential: &dyn PairPotential) -> ActivityBounds {
    let activity = (state.beta * mu).exp();
    let base = state.target();
    let mut notices = Vec::new();
    let lower = if potential.is_nonnegative() {
        Some(base)
    } else {
        notices.push("potential takes negative values; lower bound skipped".to_string());
        None
    };
    let upper = match potential.integral_u(state.d) {
        Some(iu) if iu.is_finite() => Some(base * (state.beta * state.rho * iu).exp()),
        _ => {
            notices.push("∫u dx unavailable or divergent; upper bound skipped".to_string());
            None
        }
    };
    let slack = 1e-12;
    let holds = lower.is_none_or(|l| activity >= l * (1.0 - slack)) && upper.is_none_or(|u| activity <= u * (1.0 + slack));
    ActivityBounds { activity, lower, upper, notices, holds }
}

/// One row of a density sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub rho: f64,
    pub result: SolveResult,
    /// `None` outside the finite-cluster regime.
    pub f_second: Option<f64>,
    pub dp_drho: Option<f64>,
    pub bounds: Option<ActivityBounds>,
}

/// Solves along a density grid in parallel; rows keep the grid order.
pub fn sweep(state: &ThermoState, rhos: &[f64], potential: Option<&dyn PairPotential>) -> Result<Vec<SweepRow>, ThermoError> {
    rhos.par_iter()
        .map(|&rho| {
            let s = state.with_rho(rho)?;
            let result = solve_mu(&s)?;
            let finite = result.regime == Regime::FiniteClusters && rho > 0.0;
            let f_second = if finite { Some(f_second_derivative(&s, result.mu)?) } else { None };
            let dp = f_second.map(|f| rho * f);
            let bounds = potential.filter(|_| rho > 0.0).map(|p| activity_bounds_check(&s, result.mu, p));
            Ok(SweepRow { rho, result, f_second, dp_drho: dp, bounds })
        })
        .collect()
}
