//! Pair potentials, Mayer functions and their Fourier transforms.
//!
//! A potential reports `βu` directly: the temperature factor is absorbed into
//! its parameters, and [`mayer_v`] accepts an extra multiplier for callers
//! that scan temperatures on a fixed energy landscape.

mod periodic;
mod tabulated;

use std::f64::consts::PI;
use std::fmt::Debug;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

use crate::numerics::mc::stream_rng;
use crate::numerics::quad::{bessel_j0, unit_sphere_area, CompositeRule};
use crate::numerics::series::zeta;

pub(crate) use periodic::cube;
pub use periodic::{e_hat_L, EHat, EHatPath, EHatTable, PeriodizedPotential, DEFAULT_IMAGES};
pub use tabulated::Tabulated;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("quadrature error estimate {estimate:.3e} exceeds tolerance {tol:.3e}; increase the resolution")]
    Accuracy { estimate: f64, tol: f64 },
    #[error("potential table line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("bad potential spec `{0}`")]
    Spec(String),
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Io(String),
}

/// Decay metadata: `|u(x)| ≤ c |x|^{-eta}` for `|x| > r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Temperedness {
    pub eta: f64,
    pub r: f64,
    pub c: f64,
}

/// Numerical radial transform settings for isotropic potentials without a
/// closed-form `v̂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialConfig {
    pub panels: usize,
    pub order: usize,
}

impl Default for RadialConfig {
    fn default() -> Self {
        Self { panels: 400, order: 8 }
    }
}

pub trait PairPotential: Debug + Send + Sync {
    fn name(&self) -> String;

    /// `βu(x)`; may be `+∞`.
    fn energy(&self, x: &[f64]) -> f64;

    /// `v(x) = 1 - e^{-βu(x)}`.
    fn mayer(&self, x: &[f64]) -> f64 {
        let e = self.energy(x);
        if e == f64::INFINITY {
            1.0
        } else {
            -(-e).exp_m1()
        }
    }

    /// Closed-form `v̂(κ)`, when known.
    fn vhat_closed(&self, _kappa: &[f64]) -> Option<f64> {
        None
    }

    /// `λ` for potentials whose Mayer function is `e^{-π x²/λ²}`.
    fn gaussian_length(&self) -> Option<f64> {
        None
    }

    fn is_nonnegative(&self) -> bool;

    /// Radius beyond which `u` vanishes identically, if any.
    fn range(&self) -> Option<f64> {
        None
    }

    fn temperedness(&self, d: usize) -> Temperedness;

    /// `∫ βu dx` over `R^d`, `None` when not available or divergent.
    fn integral_u(&self, d: usize) -> Option<f64>;

    fn is_isotropic(&self) -> bool {
        true
    }

    fn radial_config(&self) -> Option<RadialConfig> {
        None
    }

    /// Identical zero interaction.
    fn is_zero(&self) -> bool {
        false
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// `v(x) = e^{-π x²/λ²}`; the energy diverges logarithmically at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianExample {
    pub lambda: f64,
}

impl GaussianExample {
    pub fn new(lambda: f64) -> Result<Self, PotentialError> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(PotentialError::Domain(format!("lambda must be positive, got {lambda}")));
        }
        Ok(Self { lambda })
    }
}

impl PairPotential for GaussianExample {
    fn name(&self) -> String {
        format!("gaussian{{lambda={}}}", self.lambda)
    }

    fn energy(&self, x: &[f64]) -> f64 {
        let v = self.mayer(x);
        if v == 1.0 {
            f64::INFINITY
        } else {
            -(-v).ln_1p()
        }
    }

    fn mayer(&self, x: &[f64]) -> f64 {
        let r = norm(x) / self.lambda;
        (-PI * r * r).exp()
    }

    fn vhat_closed(&self, kappa: &[f64]) -> Option<f64> {
        let k = norm(kappa) * self.lambda;
        Some(self.lambda.powi(kappa.len() as i32) * (-PI * k * k).exp())
    }

    fn gaussian_length(&self) -> Option<f64> {
        Some(self.lambda)
    }

    fn is_nonnegative(&self) -> bool {
        true
    }

    fn temperedness(&self, d: usize) -> Temperedness {
        // beyond 2λ, u ≤ 2v and v decays faster than any power
        Temperedness { eta: d as f64 + 1.0, r: 2.0 * self.lambda, c: self.lambda.powi(d as i32 + 1) }
    }

    fn integral_u(&self, d: usize) -> Option<f64> {
        // -ln(1 - v) = Σ_k v^k / k, and ∫ v^k = λ^d k^{-d/2}
        Some(self.lambda.powi(d as i32) * zeta(1.0 + d as f64 / 2.0))
    }
}

/// `u ≡ 0`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ZeroPotential;

impl PairPotential for ZeroPotential {
    fn name(&self) -> String {
        "zero".into()
    }

    fn energy(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn mayer(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn vhat_closed(&self, _kappa: &[f64]) -> Option<f64> {
        Some(0.0)
    }

    fn is_nonnegative(&self) -> bool {
        true
    }

    fn range(&self) -> Option<f64> {
        Some(0.0)
    }

    fn temperedness(&self, d: usize) -> Temperedness {
        Temperedness { eta: d as f64 + 1.0, r: 0.0, c: 0.0 }
    }

    fn integral_u(&self, _d: usize) -> Option<f64> {
        Some(0.0)
    }

    fn is_zero(&self) -> bool {
        true
    }
}

/// `1 - e^{-β u(x)}` with `u` the potential's energy.
pub fn mayer_v(p: &dyn PairPotential, beta: f64, x: &[f64]) -> f64 {
    assert!(beta >= 0.0, "beta must be nonnegative");
    if beta == 0.0 {
        return 0.0;
    }
    if beta == 1.0 {
        return p.mayer(x);
    }
    let e = p.energy(x);
    if e == f64::INFINITY {
        1.0
    } else {
        -(-beta * e).exp_m1()
    }
}

/// `v̂(κ) = ∫ e^{-2πiκ·x} v(x) dx`.
pub fn fourier_vhat(p: &dyn PairPotential, kappa: &[f64]) -> Result<f64, PotentialError> {
    if let Some(v) = p.vhat_closed(kappa) {
        return Ok(v);
    }
    let (Some(cfg), Some(range)) = (p.radial_config(), p.range()) else {
        return Err(PotentialError::Unsupported(format!(
            "{} has no closed-form transform and no radial quadrature configured",
            p.name()
        )));
    };
    if !p.is_isotropic() {
        return Err(PotentialError::Unsupported(format!("{} is not isotropic", p.name())));
    }
    let d = kappa.len();
    let k = norm(kappa);
    let rule = CompositeRule::new(cfg.order, cfg.panels);
    let v = |r: f64| {
        let mut x = vec![0.0; d];
        x[0] = r;
        p.mayer(&x)
    };
    let value = match d {
        1 => 2.0 * rule.integrate(0.0, range, |r| v(r) * (2.0 * PI * k * r).cos()),
        2 => 2.0 * PI * rule.integrate(0.0, range, |r| v(r) * r * bessel_j0(2.0 * PI * k * r)),
        3 if k == 0.0 => 4.0 * PI * rule.integrate(0.0, range, |r| v(r) * r * r),
        3 => 2.0 / k * rule.integrate(0.0, range, |r| v(r) * r * (2.0 * PI * k * r).sin()),
        _ => {
            return Err(PotentialError::Unsupported(format!("radial transform in d = {d}")));
        }
    };
    Ok(value)
}

/// `v(λ_β y)` at the given β multiplier: the Mayer function on the thermal
/// length scale.
pub fn v_beta_rescaled(p: &dyn PairPotential, beta: f64, lambda_beta: f64, y: &[f64]) -> f64 {
    assert!(lambda_beta > 0.0);
    let x: Vec<f64> = y.iter().map(|c| c * lambda_beta).collect();
    mayer_v(p, beta, &x)
}

/// Transform of the rescaled Mayer function, `v̂_β(κ) = v̂(κ/λ_β)/λ_β^d`.
pub fn vhat_beta(p: &dyn PairPotential, lambda_beta: f64, kappa: &[f64]) -> Result<f64, PotentialError> {
    let k: Vec<f64> = kappa.iter().map(|c| c / lambda_beta).collect();
    Ok(fourier_vhat(p, &k)? / lambda_beta.powi(kappa.len() as i32))
}

fn sample_point(rng: &mut impl Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| scale * (2.0 * rng.random::<f64>() - 1.0)).collect()
}

/// Spot check of `u(x) = u(-x)` on `samples` seeded points in `[-scale, scale]^d`.
pub fn check_evenness(p: &dyn PairPotential, d: usize, scale: f64, samples: usize, seed: u64) -> bool {
    let mut rng = stream_rng(seed, 0);
    (0..samples).all(|_| {
        let x = sample_point(&mut rng, d, scale);
        let minus: Vec<f64> = x.iter().map(|c| -c).collect();
        let (a, b) = (p.energy(&x), p.energy(&minus));
        a == b || (a - b).abs() <= 1e-12 * a.abs().max(1.0)
    })
}

/// Spot check of the decay bound between `R` and `R·spread`.
pub fn check_temperedness(p: &dyn PairPotential, d: usize, spread: f64, samples: usize, seed: u64) -> bool {
    let t = p.temperedness(d);
    if t.eta <= d as f64 {
        return false;
    }
    let mut rng = stream_rng(seed, 1);
    (0..samples).all(|_| {
        let r = t.r.max(f64::MIN_POSITIVE) * (1.0 + (spread - 1.0) * rng.random::<f64>()) * (1.0 + 1e-12);
        let mut dir = sample_point(&mut rng, d, 1.0);
        let n = norm(&dir).max(1e-300);
        dir.iter_mut().for_each(|c| *c *= r / n);
        p.energy(&dir).abs() <= t.c * r.powf(-t.eta)
    })
}

/// Numerical `∫ βu dx` for isotropic potentials with a finite range.
/// Substituting `r = t²` tames integrable singularities at the origin.
pub(crate) fn radial_integral_u(p: &dyn PairPotential, d: usize, range: f64) -> f64 {
    let rule = CompositeRule::new(8, 200);
    unit_sphere_area(d)
        * rule.integrate(0.0, range.sqrt(), |t| {
            let mut x = vec![0.0; d];
            let r = t * t;
            x[0] = r;
            p.energy(&x) * r.powi(d as i32 - 1) * 2.0 * t
        })
}

/// Parses `gaussian{lambda=...}`, `zero` or `tabulated{file=...[,panels=..,order=..]}`.
pub fn parse_potential(spec: &str) -> Result<Arc<dyn PairPotential>, PotentialError> {
    let spec = spec.trim();
    let bad = || PotentialError::Spec(spec.to_string());
    let (name, args) = match spec.find('{') {
        Some(open) => {
            let inner = spec[open + 1..].strip_suffix('}').ok_or_else(bad)?;
            (&spec[..open], inner)
        }
        None => (spec, ""),
    };
    let mut params = Vec::new();
    for kv in args.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = kv.split_once('=').ok_or_else(bad)?;
        params.push((k.trim(), v.trim()));
    }
    let get = |key: &str| params.iter().find(|(k, _)| *k == key).map(|(_, v)| *v);
    let number = |key: &str| -> Result<Option<f64>, PotentialError> {
        get(key).map(|v| v.parse::<f64>().map_err(|_| bad())).transpose()
    };
    let known = |keys: &[&str]| params.iter().all(|(k, _)| keys.contains(k));
    match name.trim() {
        "gaussian" if known(&["lambda"]) => {
            Ok(Arc::new(GaussianExample::new(number("lambda")?.ok_or_else(bad)?)?))
        }
        "zero" if params.is_empty() => Ok(Arc::new(ZeroPotential)),
        "tabulated" if known(&["file", "panels", "order"]) => {
            let file = get("file").ok_or_else(bad)?;
            let mut t = Tabulated::from_file(Path::new(file))?;
            if get("panels").is_some() || get("order").is_some() {
                let mut cfg = RadialConfig::default();
                if let Some(p) = number("panels")? {
                    cfg.panels = p as usize;
                }
                if let Some(o) = number("order")? {
                    cfg.order = o as usize;
                }
                t = t.with_radial(cfg);
            }
            Ok(Arc::new(t))
        }
        _ => Err(bad()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn gaussian_mayer_values() {
        let g = GaussianExample::new(1.3).unwrap();
        assert_eq!(mayer_v(&g, 1.0, &[0.0, 0.0]), 1.0);
        assert_eq!(g.energy(&[0.0]), f64::INFINITY);
        assert_relative_eq!(mayer_v(&g, 1.0, &[1.3, 0.0]), (-PI).exp(), max_relative = 1e-15);
        assert_relative_eq!(mayer_v(&g, 1.0, &[0.0, 0.6, 1.1]), g.mayer(&[0.0, 0.6, 1.1]), max_relative = 1e-15);
        assert_eq!(mayer_v(&ZeroPotential, 2.0, &[0.3]), 0.0);
        assert_eq!(mayer_v(&g, 0.0, &[0.0]), 0.0);
    }

    #[test]
    fn gaussian_transform_values() {
        let g = GaussianExample::new(2.0).unwrap();
        assert_eq!(fourier_vhat(&g, &[0.0, 0.0]).unwrap(), 4.0);
        assert_relative_eq!(fourier_vhat(&g, &[0.5, 0.0]).unwrap(), 4.0 * (-PI).exp(), max_relative = 1e-15);
        assert_relative_eq!(fourier_vhat(&g, &[0.0, 0.0, 0.5]).unwrap(), 8.0 * (-PI).exp(), max_relative = 1e-15);
    }

    #[test]
    fn rescaled_values() {
        let g = GaussianExample::new(1.0).unwrap();
        assert_eq!(v_beta_rescaled(&g, 1.0, 1.0, &[0.4]), g.mayer(&[0.4]));
        assert_eq!(v_beta_rescaled(&g, 1.0, 1.0, &[0.0]), 1.0);
        assert_relative_eq!(v_beta_rescaled(&g, 1.0, 2.0, &[0.5, 0.0]), (-PI).exp(), max_relative = 1e-14);
    }

    #[test]
    fn radial_transform_matches_closed_form() {
        // Gaussian Mayer function routed through the numerical path
        #[derive(Debug)]
        struct Numeric(GaussianExample);
        impl PairPotential for Numeric {
            fn name(&self) -> String {
                "numeric".into()
            }
            fn energy(&self, x: &[f64]) -> f64 {
                self.0.energy(x)
            }
            fn mayer(&self, x: &[f64]) -> f64 {
                self.0.mayer(x)
            }
            fn is_nonnegative(&self) -> bool {
                true
            }
            fn range(&self) -> Option<f64> {
                Some(8.0)
            }
            fn temperedness(&self, d: usize) -> Temperedness {
                self.0.temperedness(d)
            }
            fn integral_u(&self, d: usize) -> Option<f64> {
                self.0.integral_u(d)
            }
            fn radial_config(&self) -> Option<RadialConfig> {
                Some(RadialConfig::default())
            }
        }
        let g = GaussianExample::new(1.0).unwrap();
        let n = Numeric(g);
        for d in 1..=3 {
            for k in [0.0, 0.3, 1.0] {
                let mut kappa = vec![0.0; d];
                kappa[0] = k;
                assert_relative_eq!(
                    fourier_vhat(&n, &kappa).unwrap(),
                    fourier_vhat(&g, &kappa).unwrap(),
                    max_relative = 1e-9
                );
            }
        }
        assert!(matches!(fourier_vhat(&n, &[0.0; 4]), Err(PotentialError::Unsupported(_))));
    }

    #[test]
    fn rescaled_transform_identity() {
        let g = GaussianExample::new(0.7).unwrap();
        for lb in [0.5, 1.0, 2.5] {
            let kappa = [0.4, -0.2];
            let scaled: Vec<f64> = kappa.iter().map(|c| c * lb).collect();
            let lhs = fourier_vhat(&g, &kappa).unwrap() / lb.powi(2);
            let s = 0.7 / lb;
            let closed = s * s * (-PI * s * s * (0.4f64.powi(2) + 0.2f64.powi(2)) * lb * lb).exp();
            assert_relative_eq!(lhs, vhat_beta(&g, lb, &scaled).unwrap(), max_relative = 1e-14);
            assert_relative_eq!(lhs, closed, max_relative = 1e-13);
        }
    }

    #[test]
    fn gaussian_energy_integral() {
        let g = GaussianExample::new(1.0).unwrap();
        for d in 1..=3 {
            let numeric = radial_integral_u(&g, d, 6.0);
            assert_relative_eq!(numeric, g.integral_u(d).unwrap(), max_relative = 1e-6);
        }
    }

    #[test]
    fn metadata_spot_checks() {
        let g = GaussianExample::new(1.0).unwrap();
        for d in 1..=3 {
            assert!(check_evenness(&g, d, 3.0, 200, 5));
            assert!(check_temperedness(&g, d, 4.0, 200, 5));
        }
    }

    #[test]
    fn spec_parsing() {
        let p = parse_potential("gaussian{lambda=1.5}").unwrap();
        assert_eq!(p.gaussian_length(), Some(1.5));
        assert!(parse_potential("zero").unwrap().is_zero());
        for bad in ["gaussian", "gaussian{lambda=-1}", "gaussian{lam=1}", "gaussian{lambda=1", "lj{eps=1}"] {
            assert!(parse_potential(bad).is_err(), "{bad}");
        }
    }

    proptest! {
        #[test]
        fn gaussian_mayer_is_a_probability(x in prop::collection::vec(-5.0f64..5.0, 1..4), beta in 0.0f64..3.0) {
            let g = GaussianExample::new(1.0).unwrap();
            let v = mayer_v(&g, beta, &x);
            prop_assert!((0.0..=1.0).contains(&v));
            let minus: Vec<f64> = x.iter().map(|c| -c).collect();
            prop_assert_eq!(v, mayer_v(&g, beta, &minus));
        }

        #[test]
        fn transform_is_even(k in prop::collection::vec(-3.0f64..3.0, 1..4)) {
            let g = GaussianExample::new(0.8).unwrap();
            let minus: Vec<f64> = k.iter().map(|c| -c).collect();
            prop_assert_eq!(fourier_vhat(&g, &k).unwrap(), fourier_vhat(&g, &minus).unwrap());
        }
    }
}
