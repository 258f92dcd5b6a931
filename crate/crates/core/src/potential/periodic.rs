//! Periodized Boltzmann factors on the torus `[-L/2, L/2)^d` and their
//! Fourier coefficients.

use std::f64::consts::PI;
use std::sync::Arc;

use super::{fourier_vhat, mayer_v, PairPotential, PotentialError};

/// Lattice images kept per axis on each side.
pub const DEFAULT_IMAGES: usize = 3;

#[derive(Debug, Clone)]
pub struct PeriodizedPotential {
    base: Arc<dyn PairPotential>,
    l: f64,
    beta: f64,
    images: usize,
}

/// Iterates the integer cube `[-k, k]^d` in lexicographic order.
pub(crate) fn cube(d: usize, k: i64) -> impl Iterator<Item = Vec<i64>> {
    let side = (2 * k + 1) as usize;
    let total = side.pow(d as u32);
    (0..total).map(move |mut idx| {
        let mut z = vec![0i64; d];
        for c in (0..d).rev() {
            z[c] = (idx % side) as i64 - k;
            idx /= side;
        }
        z
    })
}

impl PeriodizedPotential {
    pub fn new(base: Arc<dyn PairPotential>, l: f64, beta: f64) -> Result<Self, PotentialError> {
        if !(l > 0.0 && l.is_finite()) {
            return Err(PotentialError::Domain(format!("box side must be positive, got {l}")));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(PotentialError::Domain(format!("beta must be nonnegative, got {beta}")));
        }
        Ok(Self { base, l, beta, images: DEFAULT_IMAGES })
    }

    pub fn with_images(mut self, images: usize) -> Self {
        self.images = images;
        self
    }

    pub fn base(&self) -> &dyn PairPotential {
        self.base.as_ref()
    }

    pub fn base_arc(&self) -> Arc<dyn PairPotential> {
        Arc::clone(&self.base)
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn images(&self) -> usize {
        self.images
    }

    fn image_points<'a>(&'a self, y: &'a [f64]) -> impl Iterator<Item = Vec<f64>> + 'a {
        cube(y.len(), self.images as i64)
            .map(move |z| y.iter().zip(&z).map(|(a, &b)| a + self.l * b as f64).collect())
    }

    /// `u_L(y) = Σ_z u(y + Lz)` over the kept images.
    pub fn u_l(&self, y: &[f64]) -> f64 {
        self.image_points(y).map(|x| self.base.energy(&x)).sum()
    }

    /// `E_L(y) = e^{-β u_L(y)}`, as a product of single-image factors.
    pub fn e_l(&self, y: &[f64]) -> f64 {
        if self.base.is_zero() {
            return 1.0;
        }
        self.image_points(y).map(|x| 1.0 - mayer_v(self.base.as_ref(), self.beta, &x)).product()
    }

    /// `v_L(y) = 1 - E_L(y)`.
    pub fn v_l(&self, y: &[f64]) -> f64 {
        1.0 - self.e_l(y)
    }

    /// Bound on `|E_L - E_L^{truncated}|` for `y` in the fundamental cell.
    pub fn truncation_bound(&self, d: usize) -> f64 {
        if self.base.is_zero() {
            return 0.0;
        }
        let nearest = (self.images as f64 + 0.5) * self.l;
        if let Some(r) = self.base.range() {
            if nearest >= r {
                return 0.0;
            }
        }
        match self.base.gaussian_length() {
            Some(lambda) => {
                // first omitted shell dominates; u ≤ 2v while v ≤ 1/2
                let t = nearest / lambda;
                let shell = 2.0 * d as f64 * (2.0 * self.images as f64 + 3.0).powi(d as i32 - 1);
                4.0 * self.beta * shell * (-PI * t * t).exp()
            }
            None => f64::INFINITY,
        }
    }

    /// Bound on `|Ê_L(z) - (δ_{z,0} - L^{-d} v̂(z/L))|` from overlapping images.
    pub fn unfolding_bound(&self, d: usize) -> f64 {
        if self.base.is_zero() {
            return 0.0;
        }
        if let Some(r) = self.base.range() {
            if 2.0 * r <= self.l {
                return 0.0;
            }
        }
        match self.base.gaussian_length() {
            Some(lambda) => {
                let ratio = lambda / self.l;
                2.0 * d as f64
                    * 2f64.powf(-(d as f64) / 2.0)
                    * ratio.powi(d as i32)
                    * (-PI / (2.0 * ratio * ratio)).exp()
            }
            None => f64::INFINITY,
        }
    }
}

/// How a Fourier coefficient was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EHatPath {
    /// Midpoint rule with this many points per axis, checked against half.
    Quadrature { points: usize },
    /// `δ_{z,0} - L^{-d} v̂(z/L)`.
    Unfolded,
}

impl EHatPath {
    pub fn label(&self) -> String {
        match self {
            EHatPath::Quadrature { points } => format!("quadrature-{points}"),
            EHatPath::Unfolded => "unfolded".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EHat {
    pub value: f64,
    pub path: EHatPath,
    pub error_bound: f64,
}

fn midpoint_grid(l: f64, m: usize) -> Vec<f64> {
    let h = l / m as f64;
    (0..m).map(|k| -0.5 * l + (k as f64 + 0.5) * h).collect()
}

/// Fourier coefficients on `[-zr, zr]^d` from one midpoint grid of `m` points
/// per axis (`d ≤ 2`).
fn midpoint_coefficients(p: &PeriodizedPotential, d: usize, m: usize, zr: i64) -> Result<Vec<f64>, PotentialError> {
    let grid = midpoint_grid(p.l, m);
    // y_k = -L/2 + (k + 1/2) L/m, so 2π z y_k / L = π z (2k+1)/m - π z
    let two_m = 2 * m as i64;
    let cos_tab: Vec<f64> = (0..two_m).map(|j| (PI * j as f64 / m as f64).cos()).collect();
    let sin_tab: Vec<f64> = (0..two_m).map(|j| (PI * j as f64 / m as f64).sin()).collect();
    let phase = |z: i64, k: usize| -> (f64, f64) {
        let j = (z * (2 * k as i64 + 1)).rem_euclid(two_m) as usize;
        let sign = if z.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        (sign * cos_tab[j], sign * sin_tab[j])
    };
    let side = (2 * zr + 1) as usize;
    match d {
        1 => {
            let e: Vec<f64> = grid.iter().map(|&y| p.e_l(&[y])).collect();
            Ok((-zr..=zr)
                .map(|z| e.iter().enumerate().map(|(k, &ek)| ek * phase(z, k).0).sum::<f64>() / m as f64)
                .collect())
        }
        2 => {
            let e: Vec<Vec<f64>> = grid.iter().map(|&y1| grid.iter().map(|&y2| p.e_l(&[y1, y2])).collect()).collect();
            // partial transform along the first axis
            let partial: Vec<Vec<(f64, f64)>> = (-zr..=zr)
                .map(|z1| {
                    (0..m)
                        .map(|k2| {
                            let (mut re, mut im) = (0.0, 0.0);
                            for (k1, row) in e.iter().enumerate() {
                                let (c, s) = phase(z1, k1);
                                re += row[k2] * c;
                                im -= row[k2] * s;
                            }
                            (re, im)
                        })
                        .collect()
                })
                .collect();
            let mut out = Vec::with_capacity(side * side);
            for row in &partial {
                for z2 in -zr..=zr {
                    let mut re = 0.0;
                    for (k2, &(a, b)) in row.iter().enumerate() {
                        let (c, s) = phase(z2, k2);
                        // real part of (a + ib)(c - is)
                        re += a * c + b * s;
                    }
                    out.push(re / (m * m) as f64);
                }
            }
            Ok(out)
        }
        _ => Err(PotentialError::Unsupported(format!("quadrature of E_L in d = {d}"))),
    }
}

/// Table of `Ê_L(z)` for `z ∈ [-zr, zr]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct EHatTable {
    d: usize,
    zr: i64,
    values: Vec<f64>,
    pub path: EHatPath,
    pub error_bound: f64,
}

impl EHatTable {
    pub fn build(p: &PeriodizedPotential, d: usize, zr: i64, path: EHatPath, tol: f64) -> Result<Self, PotentialError> {
        if d == 0 || zr < 0 {
            return Err(PotentialError::Domain("table needs d ≥ 1 and a nonnegative range".into()));
        }
        let (values, error_bound) = match path {
            EHatPath::Quadrature { points } => {
                if points < 4 || points % 2 != 0 {
                    return Err(PotentialError::Domain("quadrature needs an even number of points ≥ 4".into()));
                }
                if (2 * zr as usize) >= points / 2 {
                    return Err(PotentialError::Accuracy { estimate: f64::INFINITY, tol });
                }
                let fine = midpoint_coefficients(p, d, points, zr)?;
                let coarse = midpoint_coefficients(p, d, points / 2, zr)?;
                let diff = fine.iter().zip(&coarse).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                (fine, diff + p.truncation_bound(d))
            }
            EHatPath::Unfolded => {
                if p.beta != 1.0 && !p.base.is_zero() {
                    return Err(PotentialError::Unsupported(
                        "the unfolded path needs the transform at the potential's own temperature".into(),
                    ));
                }
                let ld = p.l.powi(d as i32);
                let values = cube(d, zr)
                    .map(|z| {
                        let kappa: Vec<f64> = z.iter().map(|&c| c as f64 / p.l).collect();
                        let delta = if z.iter().all(|&c| c == 0) { 1.0 } else { 0.0 };
                        Ok(delta - fourier_vhat(p.base.as_ref(), &kappa)? / ld)
                    })
                    .collect::<Result<Vec<f64>, PotentialError>>()?;
                (values, p.unfolding_bound(d))
            }
        };
        if !(error_bound <= tol) {
            return Err(PotentialError::Accuracy { estimate: error_bound, tol });
        }
        Ok(Self { d, zr, values, path, error_bound })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn range(&self) -> i64 {
        self.zr
    }

    pub fn get(&self, z: &[i64]) -> Option<f64> {
        if z.len() != self.d || z.iter().any(|c| c.abs() > self.zr) {
            return None;
        }
        let side = 2 * self.zr + 1;
        let idx = z.iter().fold(0i64, |acc, &c| acc * side + c + self.zr);
        Some(self.values[idx as usize])
    }
}

/// Single coefficient `Ê_L(z) = L^{-d} ∫_Λ e^{-2πi z·y/L} E_L(y) dy`.
#[allow(non_snake_case)]
pub fn e_hat_L(p: &PeriodizedPotential, z: &[i64], path: EHatPath, tol: f64) -> Result<EHat, PotentialError> {
    let zr = z.iter().map(|c| c.abs()).max().unwrap_or(0);
    let d = z.len();
    if let EHatPath::Unfolded = path {
        if p.beta != 1.0 && !p.base.is_zero() {
            return Err(PotentialError::Unsupported(
                "the unfolded path needs the transform at the potential's own temperature".into(),
            ));
        }
        let kappa: Vec<f64> = z.iter().map(|&c| c as f64 / p.l).collect();
        let delta = if z.iter().all(|&c| c == 0) { 1.0 } else { 0.0 };
        let value = delta - fourier_vhat(p.base.as_ref(), &kappa)? / p.l.powi(d as i32);
        let error_bound = p.unfolding_bound(d);
        if !(error_bound <= tol) {
            return Err(PotentialError::Accuracy { estimate: error_bound, tol });
        }
        return Ok(EHat { value, path, error_bound });
    }
    let table = EHatTable::build(p, d, zr, path, tol)?;
    Ok(EHat { value: table.get(z).unwrap(), path, error_bound: table.error_bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{GaussianExample, ZeroPotential};
    use approx::assert_relative_eq;

    fn gaussian(l: f64) -> PeriodizedPotential {
        PeriodizedPotential::new(Arc::new(GaussianExample::new(1.0).unwrap()), l, 1.0).unwrap()
    }

    #[test]
    fn periodized_factor_is_even_and_periodic() {
        let p = gaussian(3.0);
        for y in [0.1, 0.7, 1.4] {
            assert_relative_eq!(p.e_l(&[y]), p.e_l(&[-y]), max_relative = 1e-14);
            assert_relative_eq!(p.e_l(&[y, 0.3]), p.e_l(&[-y, -0.3]), max_relative = 1e-14);
        }
        assert_eq!(p.e_l(&[0.0]), 0.0);
        assert_relative_eq!(p.e_l(&[-1.4]), p.e_l(&[1.6]), epsilon = 1e-12);
        assert!(p.truncation_bound(1) < 1e-30);
    }

    #[test]
    fn zero_coefficient_equals_one_minus_mean_v() {
        let p = gaussian(8.0);
        let q = e_hat_L(&p, &[0], EHatPath::Quadrature { points: 4096 }, 1e-12).unwrap();
        assert_relative_eq!(q.value, 0.875, epsilon = 1e-13);
        let grid = midpoint_grid(8.0, 4096);
        let mean_v = grid.iter().map(|&y| p.v_l(&[y])).sum::<f64>() / 4096.0;
        assert_relative_eq!(q.value, 1.0 - mean_v, epsilon = 1e-14);
    }

    #[test]
    fn paths_agree_at_l_over_lambda_8() {
        let p = gaussian(8.0);
        let quad = EHatTable::build(&p, 1, 40, EHatPath::Quadrature { points: 4096 }, 1e-12).unwrap();
        let unf = EHatTable::build(&p, 1, 40, EHatPath::Unfolded, 1e-12).unwrap();
        for z in -40..=40 {
            let a = quad.get(&[z]).unwrap();
            assert!((a - unf.get(&[z]).unwrap()).abs() <= 1e-10);
            assert!((a - quad.get(&[-z]).unwrap()).abs() < 1e-15);
            let fast = -(-PI * (z * z) as f64 / 64.0).exp() / 8.0 + if z == 0 { 1.0 } else { 0.0 };
            assert_relative_eq!(unf.get(&[z]).unwrap(), fast, epsilon = 1e-15);
        }
    }

    #[test]
    fn paths_agree_within_bound_in_two_dimensions() {
        for l in [4.0, 5.0] {
            let p = gaussian(l);
            let quad = EHatTable::build(&p, 2, 6, EHatPath::Quadrature { points: 128 }, 1e-9).unwrap();
            let unf = EHatTable::build(&p, 2, 6, EHatPath::Unfolded, 1e-2).unwrap();
            for z in cube(2, 6) {
                let gap = (quad.get(&z).unwrap() - unf.get(&z).unwrap()).abs();
                assert!(gap <= unf.error_bound + quad.error_bound + 1e-14, "{z:?} {gap}");
                assert_relative_eq!(quad.get(&z).unwrap(), quad.get(&[-z[0], -z[1]]).unwrap(), epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn converges_to_transform_at_fixed_kappa() {
        // κ = z/L = 1/4 along L = 4, 8, 12
        let vhat = (-PI / 16.0).exp();
        let mut gaps = Vec::new();
        for (l, z) in [(2.0, 0.5), (4.0, 1.0), (8.0, 2.0)] {
            let p = gaussian(l);
            let e = e_hat_L(&p, &[z as i64], EHatPath::Quadrature { points: 1024 }, 1e-12);
            if z < 1.0 {
                continue;
            }
            let e = e.unwrap();
            gaps.push((e.value * l + vhat).abs());
        }
        assert!(gaps.windows(2).all(|w| w[1] <= w[0]));
        assert!(*gaps.last().unwrap() < 1e-12);
    }

    #[test]
    fn zero_potential_gives_delta() {
        let p = PeriodizedPotential::new(Arc::new(ZeroPotential), 5.0, 1.0).unwrap();
        for path in [EHatPath::Quadrature { points: 64 }, EHatPath::Unfolded] {
            let t = EHatTable::build(&p, 1, 5, path, 1e-14).unwrap();
            for z in -5..=5 {
                let want = if z == 0 { 1.0 } else { 0.0 };
                assert!((t.get(&[z]).unwrap() - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn coarse_grids_are_rejected() {
        let p = gaussian(8.0);
        let r = EHatTable::build(&p, 1, 2, EHatPath::Quadrature { points: 16 }, 1e-12);
        assert!(matches!(r, Err(PotentialError::Accuracy { .. })));
    }
}
