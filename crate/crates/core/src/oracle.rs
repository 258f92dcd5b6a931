//! Brute-force finite-volume ground truth: `Q_{N,L}` from position space and
//! from the constrained momentum sum, and the recurrence that links them
//! through the finite-volume weights `q_n^L`.

use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::LabeledGraph;
use crate::momentum::edge_parametrization;
use crate::numerics::mc::{batch_sizes, combine_batches, stream_rng, BatchSums};
use crate::potential::{fourier_vhat, EHatPath, EHatTable, PairPotential, PeriodizedPotential, PotentialError};
use crate::weights::{constrained_lattice_sum, factorial, q_n_finite_L, WeightError};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("capacity: {0}")]
    Capacity(String),
    #[error("tail bound {estimate:.3e} exceeds tolerance {tol:.3e}")]
    Accuracy { estimate: f64, tol: f64 },
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Weights(#[from] WeightError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
}

/// `N` particles in the periodic box `[-L/2, L/2)^d`.
#[derive(Debug, Clone)]
pub struct FiniteSystem {
    pub n: usize,
    pub d: usize,
    pub lambda_beta: f64,
    pub potential: PeriodizedPotential,
}

impl FiniteSystem {
    pub fn new(n: usize, l: f64, d: usize, beta: f64, lambda_beta: f64, base: Arc<dyn PairPotential>) -> Result<Self, OracleError> {
        if d == 0 {
            return Err(OracleError::Domain("dimension must be positive".into()));
        }
        if !(lambda_beta > 0.0 && lambda_beta.is_finite()) {
            return Err(OracleError::Domain("thermal wavelength must be positive".into()));
        }
        let potential = PeriodizedPotential::new(base, l, beta)?;
        Ok(Self { n, d, lambda_beta, potential })
    }

    pub fn l(&self) -> f64 {
        self.potential.l()
    }

    pub fn with_n(&self, n: usize) -> Self {
        Self { n, ..self.clone() }
    }

    /// `(L/λ_β)^{dN} / N!`, the ideal-gas value.
    pub fn ideal(&self) -> f64 {
        (self.l() / self.lambda_beta).powi((self.d * self.n) as i32) / factorial(self.n)
    }
}

/// An oracle value with its error estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleValue {
    pub value: f64,
    pub error: f64,
    pub method: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DirectMethod {
    /// Periodic grid with `points` nodes per axis, compared against half
    /// the resolution.
    Grid { points: usize },
    MonteCarlo { samples: u64, seed: u64 },
}

/// Largest number of grid configurations visited by one integral.
const GRID_CAP: u128 = 1 << 33;
const MC_BATCHES: u64 = 64;

fn wrap(y: f64, l: f64) -> f64 {
    if y >= 0.5 * l {
        y - l
    } else {
        y
    }
}

/// `Σ Π_{i<j} E_L(x_j - x_i)` over grid points, `x_0 = 0`, times the cell volume.
fn grid_integral(sys: &FiniteSystem, m: usize) -> f64 {
    let (d, l, n) = (sys.d, sys.l(), sys.n);
    let h = l / m as f64;
    let cells = m.pow(d as u32);
    // E_L on every grid displacement, flattened row-major
    let e: Vec<f64> = (0..cells)
        .into_par_iter()
        .map(|idx| {
            let mut y = vec![0.0; d];
            let mut r = idx;
            for c in (0..d).rev() {
                y[c] = wrap((r % m) as f64 * h, l);
                r /= m;
            }
            sys.potential.e_l(&y)
        })
        .collect();
    let diff = |a: usize, b: usize| -> usize {
        // index of (b - a) mod m per axis
        let (mut ra, mut rb, mut out, mut stride) = (a, b, 0, 1);
        for _ in 0..d {
            let c = ((rb % m) + m - (ra % m)) % m;
            out += c * stride;
            stride *= m;
            ra /= m;
            rb /= m;
        }
        out
    };
    let free = n - 1;
    let sum: f64 = if free == 0 {
        1.0
    } else {
        let partial: Vec<f64> = (0..cells)
            .into_par_iter()
            .map(|first| {
                let mut pos = vec![0usize; free];
                pos[0] = first;
                let mut acc = 0.0;
                loop {
                    let mut prod = 1.0;
                    for j in 0..free {
                        prod *= e[pos[j]];
                        for i in 0..j {
                            prod *= e[diff(pos[i], pos[j])];
                        }
                    }
                    acc += prod;
                    let mut k = free - 1;
                    loop {
                        if k == 0 {
                            return acc;
                        }
                        if pos[k] + 1 < cells {
                            pos[k] += 1;
                            break;
                        }
                        pos[k] = 0;
                        k -= 1;
                    }
                }
            })
            .collect();
        partial.iter().sum()
    };
    sum * h.powi((d * free) as i32)
}

/// `Q_{N,L} = λ_β^{-dN}/N! ∫_{Λ^N} Π_{i<j} E_L(x_j - x_i) dx`, integrating
/// `N - 1` relative coordinates and multiplying by `L^d`.
pub fn q_direct(sys: &FiniteSystem, method: DirectMethod) -> Result<OracleValue, OracleError> {
    let (n, d, l) = (sys.n, sys.d, sys.l());
    let norm = l.powi(d as i32) / (sys.lambda_beta.powi((d * n) as i32) * factorial(n));
    if n <= 1 {
        let value = if n == 0 { 1.0 } else { norm };
        return Ok(OracleValue { value, error: 0.0, method: "exact".into() });
    }
    let supported = (d == 1 && n <= 4) || (d == 2 && n <= 3);
    if !supported {
        return Err(OracleError::Capacity(format!("direct integration supports d = 1, N ≤ 4 and d = 2, N ≤ 3; got d = {d}, N = {n}")));
    }
    let pairs = (n * (n - 1) / 2) as f64;
    match method {
        DirectMethod::Grid { points } => {
            if points < 4 || !points.is_power_of_two() {
                return Err(OracleError::Domain("grid resolution must be a power of two ≥ 4".into()));
            }
            let configs = (points as u128).pow((d * (n - 1)) as u32);
            if configs > GRID_CAP {
                return Err(OracleError::Capacity(format!("{configs} grid configurations exceed {GRID_CAP}")));
            }
            let fine = grid_integral(sys, points) * norm;
            let coarse = grid_integral(sys, points / 2) * norm;
            let error = (fine - coarse).abs() + fine.abs() * pairs * sys.potential.truncation_bound(d);
            Ok(OracleValue { value: fine, error, method: format!("grid{{points={points}}}") })
        }
        DirectMethod::MonteCarlo { samples, seed } => {
            let sizes = batch_sizes(samples, MC_BATCHES);
            let batches: Vec<BatchSums> = sizes
                .par_iter()
                .enumerate()
                .map(|(b, &count)| {
                    let mut rng = stream_rng(seed, b as u64);
                    let mut sums = BatchSums::default();
                    let mut x = vec![vec![0.0; d]; n];
                    let mut y = vec![0.0; d];
                    for _ in 0..count {
                        for p in x.iter_mut().skip(1) {
                            for c in p.iter_mut() {
                                *c = l * (rng.random::<f64>() - 0.5);
                            }
                        }
                        let mut w = 1.0;
                        for j in 1..n {
                            for i in 0..j {
                                for c in 0..d {
                                    y[c] = (x[j][c] - x[i][c] + 0.5 * l).rem_euclid(l) - 0.5 * l;
                                }
                                w *= sys.potential.e_l(&y);
                            }
                        }
                        sums.push(w);
                    }
                    sums
                })
                .collect();
            let est = combine_batches(&batches);
            let vol = l.powi((d * (n - 1)) as i32);
            let value = est.mean * vol * norm;
            let error = est.std_error * vol * norm + value.abs() * pairs * sys.potential.truncation_bound(d);
            Ok(OracleValue { value, error, method: format!("mc{{samples={samples},seed={seed}}}") })
        }
    }
}

/// Coefficient path for a box: the closed transform when the images do not
/// overlap at the requested tolerance, quadrature otherwise.
pub fn auto_path(p: &PeriodizedPotential, d: usize, zr: i64, tol: f64) -> EHatPath {
    if (p.beta() == 1.0 || p.base().is_zero()) && p.unfolding_bound(d) <= tol {
        EHatPath::Unfolded
    } else {
        let points = ((4 * zr as usize + 4).max(256)).next_power_of_two();
        EHatPath::Quadrature { points }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumConfig {
    pub zmax: i64,
    /// Relative tolerance on the lattice tail.
    pub tol: f64,
    /// Enables `N = 4`.
    pub allow_four: bool,
}

impl Default for MomentumConfig {
    fn default() -> Self {
        Self { zmax: 64, tol: 1e-9, allow_four: false }
    }
}

/// `Q_{N,L} = (L/λ_β)^{dN}/N! Σ_{z_{ij}} Π Ê_L(z_{ij}) Π_k δ_{Z_k,0}`, with
/// the vertex constraints solved exactly over the complete graph.
pub fn q_momentum(sys: &FiniteSystem, cfg: MomentumConfig) -> Result<OracleValue, OracleError> {
    let (n, d) = (sys.n, sys.d);
    if n > 4 || (n == 4 && !cfg.allow_four) {
        return Err(OracleError::Capacity(format!("momentum sums support N ≤ 3 (N = 4 when enabled); got {n}")));
    }
    if n == 0 {
        return Ok(OracleValue { value: 1.0, error: 0.0, method: "exact".into() });
    }
    let g = LabeledGraph::complete(n);
    let param = edge_parametrization(&g);
    let reach = param.coefficients.iter().map(|r| r.iter().map(|c| c.abs()).sum::<i64>()).max().unwrap_or(0) * cfg.zmax;
    let zr = reach.max(cfg.zmax);
    let path = auto_path(&sys.potential, d, zr, 1e-14);
    let table = EHatTable::build(&sys.potential, d, zr, path, 1e-10)?;
    let lambda = sys.potential.base().gaussian_length();
    let s = constrained_lattice_sum(&g, &table, cfg.zmax, false, lambda, sys.l())?;
    let value = sys.ideal() * s.value;
    let error = sys.ideal() * s.tail_bound;
    if !(error <= cfg.tol * value.abs()) {
        return Err(OracleError::Accuracy { estimate: error, tol: cfg.tol * value.abs() });
    }
    Ok(OracleValue { value, error, method: format!("momentum{{zmax={},path={}}}", cfg.zmax, path.label()) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecurrenceConfig {
    pub points: usize,
    pub zmax: i64,
    /// Relative precision the check must certify.
    pub tol: f64,
}

impl Default for RecurrenceConfig {
    fn default() -> Self {
        Self { points: 4096, zmax: 64, tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecurrenceReport {
    pub n: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub lhs_error: f64,
    pub rhs_error: f64,
    /// `Ê_L(0)`, the factor raised to `n(N - n)`.
    pub e0: f64,
    /// False when the error budgets exceed the tolerance.
    pub conclusive: bool,
}

/// Relative residual of
/// `Q_{N,L} = (ρλ_β^d)^{-1} Σ_{n=1}^N Ê_L(0)^{n(N-n)} q_n^L Q_{N-n,L}`, `ρ = N/L^d`.
pub fn recurrence_residual(sys: &FiniteSystem, cfg: RecurrenceConfig) -> Result<RecurrenceReport, OracleError> {
    let (big_n, d, l) = (sys.n, sys.d, sys.l());
    if big_n == 0 || big_n > 4 {
        return Err(OracleError::Capacity(format!("recurrence check supports 1 ≤ N ≤ 4; got {big_n}")));
    }
    let grid = DirectMethod::Grid { points: if big_n == 4 { cfg.points.min(256) } else { cfg.points } };
    let q: Vec<OracleValue> = (0..=big_n).map(|k| q_direct(&sys.with_n(k), grid)).collect::<Result<_, _>>()?;
    let reach = (big_n.max(3) as i64 - 1) * cfg.zmax;
    let path = auto_path(&sys.potential, d, reach, 1e-14);
    let table = EHatTable::build(&sys.potential, d, reach, path, 1e-10)?;
    let e0 = table.get(&vec![0; d]).unwrap();
    let rho_ld = big_n as f64 / l.powi(d as i32) * sys.lambda_beta.powi(d as i32);
    let (mut rhs, mut rhs_error) = (0.0, 0.0);
    for n in 1..=big_n {
        let w = q_n_finite_L(n, &sys.potential, &table, sys.lambda_beta, cfg.zmax, f64::INFINITY)?;
        let factor = e0.powi((n * (big_n - n)) as i32) / rho_ld;
        let rest = &q[big_n - n];
        rhs += factor * w.value * rest.value;
        rhs_error += factor.abs() * (w.error * rest.value.abs() + w.value.abs() * rest.error);
    }
    let lhs = q[big_n].value;
    let residual = ((lhs - rhs) / lhs).abs();
    let budget = (q[big_n].error + rhs_error) / lhs.abs();
    Ok(RecurrenceReport { n: big_n, lhs, rhs, residual, lhs_error: q[big_n].error, rhs_error, e0, conclusive: budget <= cfg.tol })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitRow {
    pub l: f64,
    /// `ρL^d`.
    pub big_n: f64,
    pub factor: f64,
    pub target: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitReport {
    pub rows: Vec<LimitRow>,
    pub monotone: bool,
}

/// Tabulates `Ê_L(0)^{n(N-n)}` against `e^{-nρv̂(0)}` along a ladder of
/// boxes at fixed `ρ = N/L^d`.
pub fn limit_factor_check(n: usize, rho: f64, potential: Arc<dyn PairPotential>, d: usize, ladder: &[f64]) -> Result<LimitReport, OracleError> {
    if !(rho >= 0.0) {
        return Err(OracleError::Domain(format!("density must be nonnegative, got {rho}")));
    }
    let vhat0 = if potential.is_zero() { 0.0 } else { fourier_vhat(potential.as_ref(), &vec![0.0; d])? };
    let target = (-(n as f64) * rho * vhat0).exp();
    let mut rows = Vec::with_capacity(ladder.len());
    for &l in ladder {
        let p = PeriodizedPotential::new(Arc::clone(&potential), l, 1.0)?;
        let path = auto_path(&p, d, 0, 1e-14);
        let e0 = EHatTable::build(&p, d, 0, path, 1e-10)?.get(&vec![0; d]).unwrap();
        let big_n = rho * l.powi(d as i32);
        let factor = e0.powf(n as f64 * (big_n - n as f64));
        rows.push(LimitRow { l, big_n, factor, target, gap: (factor - target).abs() });
    }
    let monotone = rows.windows(2).all(|w| w[1].gap <= w[0].gap);
    Ok(LimitReport { rows, monotone })
}

/// One JSON line of an oracle report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRecord {
    pub task: String,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub l: f64,
    pub d: usize,
    pub value: f64,
    pub error: f64,
    pub method: String,
    /// Omitted unless timings are requested, so reports stay reproducible.
    pub seconds: Option<f64>,
}

impl OracleRecord {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

/// Runs `f` and returns its result with the elapsed wall time.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}
