//! Isotropic potentials given as a table of `(|x|, βu)` pairs.

use std::fs;
use std::path::Path;

use super::{radial_integral_u, PairPotential, PotentialError, RadialConfig, Temperedness};

/// Natural cubic spline through the table, zero beyond the last radius and
/// constant below the first.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    name: String,
    r: Vec<f64>,
    u: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
    radial: Option<RadialConfig>,
}

impl Tabulated {
    pub fn new(name: impl Into<String>, r: Vec<f64>, u: Vec<f64>) -> Result<Self, PotentialError> {
        if r.len() != u.len() || r.len() < 2 {
            return Err(PotentialError::Domain("a table needs at least two (r, u) rows".into()));
        }
        if r[0] < 0.0 || r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(PotentialError::Domain("radii must be nonnegative and strictly ascending".into()));
        }
        if r.iter().chain(&u).any(|v| !v.is_finite()) {
            return Err(PotentialError::Domain("table entries must be finite".into()));
        }
        let m = natural_second_derivatives(&r, &u);
        Ok(Self { name: name.into(), r, u, m, radial: None })
    }

    /// Reads two whitespace-separated columns; `#` starts a comment.
    pub fn from_file(path: &Path) -> Result<Self, PotentialError> {
        let text = fs::read_to_string(path).map_err(|e| PotentialError::Io(format!("{}: {e}", path.display())))?;
        let (mut r, mut u) = (Vec::new(), Vec::new());
        for (idx, line) in text.lines().enumerate() {
            let content = line.split('#').next().unwrap().trim();
            if content.is_empty() {
                continue;
            }
            let cols: Vec<&str> = content.split_whitespace().collect();
            let parse_err = |reason: &str| PotentialError::Parse { line: idx + 1, reason: reason.into() };
            if cols.len() != 2 {
                return Err(parse_err("expected two columns"));
            }
            let a: f64 = cols[0].parse().map_err(|_| parse_err("radius is not a number"))?;
            let b: f64 = cols[1].parse().map_err(|_| parse_err("energy is not a number"))?;
            if let Some(&last) = r.last() {
                if a <= last {
                    return Err(parse_err("radii must be strictly ascending"));
                }
            }
            r.push(a);
            u.push(b);
        }
        Self::new(format!("tabulated{{file={}}}", path.display()), r, u)
    }

    pub fn with_radial(mut self, cfg: RadialConfig) -> Self {
        self.radial = Some(cfg);
        self
    }

    /// Spline value at radius `x`.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.r.len();
        if x >= self.r[n - 1] {
            return if x == self.r[n - 1] { self.u[n - 1] } else { 0.0 };
        }
        if x <= self.r[0] {
            return self.u[0];
        }
        let k = self.r.partition_point(|&ri| ri <= x) - 1;
        let h = self.r[k + 1] - self.r[k];
        let a = (self.r[k + 1] - x) / h;
        let b = (x - self.r[k]) / h;
        a * self.u[k] + b * self.u[k + 1] + ((a * a * a - a) * self.m[k] + (b * b * b - b) * self.m[k + 1]) * h * h / 6.0
    }
}

fn natural_second_derivatives(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    // Thomas algorithm on the interior equations
    let mut c_prime = vec![0.0; n];
    let mut d_prime = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        let rhs = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
        let diag = 2.0 * (h0 + h1) - h0 * c_prime[i - 1];
        c_prime[i] = h1 / diag;
        d_prime[i] = (rhs - h0 * d_prime[i - 1]) / diag;
    }
    for i in (1..n - 1).rev() {
        m[i] = d_prime[i] - c_prime[i] * m[i + 1];
    }
    m
}

impl PairPotential for Tabulated {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn energy(&self, x: &[f64]) -> f64 {
        self.eval(x.iter().map(|c| c * c).sum::<f64>().sqrt())
    }

    fn is_nonnegative(&self) -> bool {
        self.u.iter().all(|&v| v >= 0.0)
    }

    fn range(&self) -> Option<f64> {
        self.r.last().copied()
    }

    fn temperedness(&self, d: usize) -> Temperedness {
        Temperedness { eta: d as f64 + 1.0, r: *self.r.last().unwrap(), c: 0.0 }
    }

    fn integral_u(&self, d: usize) -> Option<f64> {
        Some(radial_integral_u(self, d, *self.r.last().unwrap()))
    }

    fn radial_config(&self) -> Option<RadialConfig> {
        self.radial
    }
}
