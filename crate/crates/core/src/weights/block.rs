//! Single-block weights: Gaussian closed form, cycle integrals and
//! importance-sampled multiple integrals.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{parity_sign, BlockMode, BlockWeight, WeightError, WeightParams};
use crate::graph::{count_spanning_trees, cycle_basis, gram_determinant, CycleBasis, GraphError, LabeledGraph};
use crate::numerics::mc::{batch_sizes, combine_batches, stream_rng, BatchSums};
use crate::numerics::quad::{unit_sphere_area, CompositeRule};
use crate::potential::{vhat_beta, Tabulated};

/// Evaluator for the rescaled transform `v̂_β` as a function of `|κ|²`.
#[derive(Debug, Clone)]
pub enum VhatBeta {
    Zero,
    /// `s^d e^{-π s² κ²}` with `s = λ/λ_β`.
    Gaussian { s: f64, amp: f64 },
    /// Spline through the numerical radial transform, zero beyond `kmax`.
    Radial { table: Tabulated, kmax: f64 },
}

const RADIAL_KNOTS: usize = 2048;

impl VhatBeta {
    pub fn new(params: &WeightParams) -> Result<Self, WeightError> {
        let p = params.potential.as_ref();
        let d = params.d;
        if p.is_zero() {
            return Ok(VhatBeta::Zero);
        }
        if let Some(lambda) = p.gaussian_length() {
            let s = lambda / params.lambda_beta;
            return Ok(VhatBeta::Gaussian { s, amp: s.powi(d as i32) });
        }
        if !p.is_isotropic() {
            return Err(WeightError::Unsupported(format!("{} is not isotropic", p.name())));
        }
        let at = |k: f64| -> Result<f64, WeightError> {
            let mut kappa = vec![0.0; d];
            kappa[0] = k;
            Ok(vhat_beta(p, params.lambda_beta, &kappa)?)
        };
        let peak = at(0.0)?.abs().max(f64::MIN_POSITIVE);
        // widen until the transform is negligible over a whole octave
        let mut kmax = 1.0;
        while kmax < 256.0 {
            let quiet = (1..=32).map(|j| kmax * (1.0 + j as f64 / 32.0)).try_fold(true, |acc, k| {
                at(k).map(|v| acc && v.abs() < 1e-8 * peak)
            })?;
            kmax *= 2.0;
            if quiet {
                break;
            }
        }
        let knots: Vec<f64> = (0..RADIAL_KNOTS).map(|j| kmax * j as f64 / (RADIAL_KNOTS - 1) as f64).collect();
        let values = knots.iter().map(|&k| at(k)).collect::<Result<Vec<_>, _>>()?;
        let table = Tabulated::new("vhat_beta", knots, values).map_err(WeightError::from)?;
        Ok(VhatBeta::Radial { table, kmax })
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, VhatBeta::Zero)
    }

    pub fn eval_sq(&self, k2: f64) -> f64 {
        match self {
            VhatBeta::Zero => 0.0,
            VhatBeta::Gaussian { s, amp } => amp * (-PI * s * s * k2).exp(),
            VhatBeta::Radial { table, .. } => table.eval(k2.sqrt()),
        }
    }

    /// `Π_e v̂_β(k_e)` from the squared norms of the edge momenta.
    fn edge_product(&self, sq: &[f64]) -> f64 {
        match self {
            VhatBeta::Gaussian { s, amp } => {
                amp.powi(sq.len() as i32) * (-PI * s * s * sq.iter().sum::<f64>()).exp()
            }
            _ => sq.iter().map(|&k2| self.eval_sq(k2)).product(),
        }
    }

    /// `∫ |κ|^{d-1+extra} v̂_β^power` over the radial coordinate, times the
    /// sphere area. With `core` set, `|v̂_β|` is used and cut off where it
    /// falls below `10^{-3}` of its peak.
    fn radial_moment(&self, d: usize, extra: i32, power: i32, core: bool) -> f64 {
        let VhatBeta::Radial { table, kmax } = self else {
            return f64::NAN;
        };
        let floor = 1e-3 * table.eval(0.0).abs();
        let rule = CompositeRule::new(8, 256);
        unit_sphere_area(d)
            * rule.integrate(0.0, *kmax, |k| {
                let v = table.eval(k);
                let v = if !core {
                    v
                } else if v.abs() >= floor {
                    v.abs()
                } else {
                    0.0
                };
                v.powi(power) * k.powi(d as i32 - 1 + extra)
            })
    }

    /// Per-coordinate variance of the sampling density: the second moment of
    /// the core of `|v̂_β|`, exactly `1/(2π s²)` for the Gaussian.
    pub fn proposal_variance(&self, d: usize) -> f64 {
        match self {
            VhatBeta::Zero => 1.0,
            VhatBeta::Gaussian { s, .. } => 1.0 / (2.0 * PI * s * s),
            VhatBeta::Radial { .. } => self.radial_moment(d, 2, 1, true) / self.radial_moment(d, 0, 1, true) / d as f64,
        }
    }
}

/// `(-1)^n ∫ v̂_β(κ)^n dκ`, the weight of an `n`-cycle.
pub fn g_cycle_exact(n: usize, params: &WeightParams) -> Result<BlockWeight, WeightError> {
    if n < 3 {
        return Err(WeightError::Domain(format!("cycles have at least 3 vertices, got {n}")));
    }
    let d = params.d;
    let block = LabeledGraph::cycle(n)?;
    let sign = parity_sign(n);
    let vhat = VhatBeta::new(params)?;
    let value = match &vhat {
        VhatBeta::Zero => 0.0,
        VhatBeta::Gaussian { s, .. } => sign * s.powi((d * (n - 1)) as i32) * (n as f64).powf(-(d as f64) / 2.0),
        VhatBeta::Radial { .. } => sign * vhat.radial_moment(d, 0, n as i32, false),
    };
    let mode = if matches!(vhat, VhatBeta::Gaussian { .. }) { BlockMode::GaussianExact } else { BlockMode::CycleExact };
    Ok(BlockWeight::exact(block, value, mode))
}

/// Closed form for the Gaussian example:
/// `(-1)^{|E|} (λ/λ_β)^{d(|V|-1)} det(CᵀC)^{-d/2}`, with the Gram determinant
/// checked against the spanning-tree count.
pub fn g_block_gaussian_exact(b: &LabeledGraph, lambda: f64, lambda_beta: f64, d: usize) -> Result<BlockWeight, WeightError> {
    let basis = cycle_basis(b)?;
    let det = gram_determinant(&basis);
    let tau = count_spanning_trees(b)?;
    if det != tau {
        return Err(WeightError::Inconsistent(format!(
            "Gram determinant {det} differs from spanning-tree count {tau} for {b}"
        )));
    }
    let s = lambda / lambda_beta;
    let value =
        parity_sign(b.edge_count()) * s.powi((d * (b.n() - 1)) as i32) * (det as f64).powf(-(d as f64) / 2.0);
    Ok(BlockWeight::exact(b.clone(), value, BlockMode::GaussianExact))
}

/// Monte Carlo settings. The batch count fixes the random-stream layout, so
/// estimates do not depend on how many threads run the batches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub samples: u64,
    pub seed: u64,
    pub batches: u64,
    /// Largest `N_free · d` accepted.
    pub dim_cap: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        Self { samples: 1_000_000, seed: 0, batches: 64, dim_cap: 48 }
    }
}

pub fn g_block_mc(b: &LabeledGraph, params: &WeightParams, cfg: &McConfig) -> Result<BlockWeight, WeightError> {
    if !b.is_connected() {
        return Err(GraphError::Disconnected.into());
    }
    let basis = cycle_basis(b)?;
    g_block_mc_with_basis(&basis, params, cfg)
}

/// Importance-sampled `(-1)^{|E|} ∫ Π_e v̂_β(Σ_j c_ej κ_j) dκ` with
/// independent Gaussian free momenta.
pub fn g_block_mc_with_basis(basis: &CycleBasis, params: &WeightParams, cfg: &McConfig) -> Result<BlockWeight, WeightError> {
    let b = basis.graph().clone();
    let d = params.d;
    let k = basis.free_count();
    if k * d > cfg.dim_cap {
        return Err(WeightError::Capacity(format!("{} integration dimensions exceed the cap {}", k * d, cfg.dim_cap)));
    }
    if cfg.samples == 0 || cfg.batches == 0 {
        return Err(WeightError::Domain("samples and batches must be positive".into()));
    }
    let mut weight = BlockWeight {
        block: b.clone(),
        value: 0.0,
        mode: BlockMode::MonteCarlo,
        std_error: 0.0,
        samples: cfg.samples,
        seed: Some(cfg.seed),
    };
    let vhat = VhatBeta::new(params)?;
    if vhat.is_zero() {
        return Ok(weight);
    }
    if k == 0 {
        weight.value = 1.0;
        return Ok(weight);
    }
    let sigma2 = vhat.proposal_variance(d);
    let dim = k * d;
    // -ln q(κ) = |ξ|²/2 + (dim/2) ln(2π σ²) with κ = σ ξ
    let log_norm = 0.5 * dim as f64 * (2.0 * PI * sigma2).ln();
    let coeffs = basis.coefficients();
    let sizes = batch_sizes(cfg.samples, cfg.batches);
    let batches: Vec<BatchSums> = sizes
        .par_iter()
        .enumerate()
        .map(|(bi, &m)| {
            let mut rng = stream_rng(cfg.seed, bi as u64);
            let mut xi = vec![0.0f64; dim];
            let mut sq = vec![0.0f64; coeffs.len()];
            let mut acc = BatchSums::default();
            for _ in 0..m {
                let mut xi2 = 0.0;
                for x in xi.iter_mut() {
                    *x = rng.sample(StandardNormal);
                    xi2 += *x * *x;
                }
                for (e, row) in coeffs.iter().enumerate() {
                    let mut s2 = 0.0;
                    for c in 0..d {
                        let mut comp = 0.0;
                        for (j, &cj) in row.iter().enumerate() {
                            if cj != 0 {
                                comp += f64::from(cj) * xi[j * d + c];
                            }
                        }
                        s2 += comp * comp;
                    }
                    sq[e] = s2 * sigma2;
                }
                let f = vhat.edge_product(&sq);
                acc.push(f * (0.5 * xi2 + log_norm).exp());
            }
            acc
        })
        .collect();
    let est = combine_batches(&batches);
    if est.effective_samples < 0.01 * cfg.samples as f64 {
        return Err(WeightError::Diagnostics { ess: est.effective_samples, samples: cfg.samples });
    }
    let sign = parity_sign(b.edge_count());
    weight.value = sign * est.mean;
    weight.std_error = est.std_error;
    Ok(weight)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Atlas;
    use crate::potential::{GaussianExample, ZeroPotential};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn gauss(d: usize, lambda: f64, lambda_beta: f64) -> WeightParams {
        WeightParams::new(Arc::new(GaussianExample::new(lambda).unwrap()), d, lambda_beta).unwrap()
    }

    fn cfg(samples: u64, seed: u64) -> McConfig {
        McConfig { samples, seed, ..McConfig::default() }
    }

    #[test]
    fn cycle_closed_form_values() {
        assert_relative_eq!(g_cycle_exact(3, &gauss(2, 1.0, 1.0)).unwrap().value, -1.0 / 3.0, max_relative = 1e-15);
        for d in 1..=3 {
            let w = g_cycle_exact(4, &gauss(d, 1.0, 2.0)).unwrap().value;
            assert_relative_eq!(w, 4f64.powf(-(d as f64) / 2.0) * 0.5f64.powi(3 * d as i32), max_relative = 1e-14);
        }
        let zero = WeightParams::new(Arc::new(ZeroPotential), 2, 1.0).unwrap();
        assert_eq!(g_cycle_exact(3, &zero).unwrap().value, 0.0);
        assert!(g_cycle_exact(2, &zero).is_err());
    }

    #[test]
    fn gram_closed_form_values() {
        let k4 = g_block_gaussian_exact(&LabeledGraph::complete(4), 1.0, 1.0, 2).unwrap();
        assert_relative_eq!(k4.value, 1.0 / 16.0, max_relative = 1e-15);
        let diamond = LabeledGraph::new(4, [(1, 2), (1, 3), (2, 3), (2, 4), (3, 4)]).unwrap();
        assert_relative_eq!(g_block_gaussian_exact(&diamond, 1.0, 1.0, 2).unwrap().value, -1.0 / 8.0, max_relative = 1e-15);
        for n in 3..=8 {
            for d in 1..=3 {
                let p = gauss(d, 1.3, 0.9);
                let a = g_block_gaussian_exact(&LabeledGraph::cycle(n).unwrap(), 1.3, 0.9, d).unwrap().value;
                assert_eq!(a, g_cycle_exact(n, &p).unwrap().value);
            }
        }
        let bridged = LabeledGraph::new(3, [(1, 2), (2, 3)]).unwrap();
        assert!(g_block_gaussian_exact(&bridged, 1.0, 1.0, 2).is_err());
    }

    #[test]
    fn mc_reproduces_triangle_and_k4() {
        let p = gauss(2, 1.0, 1.0);
        let t = g_block_mc(&LabeledGraph::cycle(3).unwrap(), &p, &cfg(200_000, 7)).unwrap();
        assert!((t.value + 1.0 / 3.0).abs() <= 3.0 * t.std_error, "{t:?}");
        let k4 = g_block_mc(&LabeledGraph::complete(4), &p, &cfg(200_000, 7)).unwrap();
        assert!((k4.value - 1.0 / 16.0).abs() <= 3.0 * k4.std_error, "{k4:?}");
        assert!(k4.std_error > 0.0);
    }

    #[test]
    fn mc_zero_transform_is_exactly_zero() {
        let zero = WeightParams::new(Arc::new(ZeroPotential), 2, 1.0).unwrap();
        let w = g_block_mc(&LabeledGraph::complete(4), &zero, &cfg(1000, 1)).unwrap();
        assert_eq!((w.value, w.std_error), (0.0, 0.0));
    }

    #[test]
    fn mc_is_thread_count_invariant() {
        let p = gauss(2, 1.0, 1.0);
        let g = LabeledGraph::complete(4);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| g_block_mc(&g, &p, &cfg(50_000, 3)).unwrap())
        };
        let (a, b) = (run(1), run(4));
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
    }

    #[test]
    fn mc_is_basis_invariant() {
        let p = gauss(2, 1.0, 1.0);
        let g = LabeledGraph::complete(4);
        let basis = cycle_basis(&g).unwrap();
        let other = basis.transformed(&[2, 0, 1], &[-1, 1, -1]).sheared(0, 1, 1);
        let a = g_block_mc_with_basis(&basis, &p, &cfg(100_000, 11)).unwrap();
        let b = g_block_mc_with_basis(&other, &p, &cfg(100_000, 12)).unwrap();
        let combined = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        assert!((a.value - b.value).abs() <= 3.0 * combined);
    }

    #[test]
    fn mc_sign_follows_edge_parity() {
        let p = gauss(2, 1.0, 1.0);
        let atlas = Atlas::default();
        for g in atlas.enumerate_valid(5, None).unwrap().step_by(23) {
            let w = g_block_mc(&g, &p, &cfg(20_000, 5)).unwrap();
            let sign = parity_sign(g.edge_count());
            assert!(w.value * sign > -3.0 * w.std_error, "{g}");
        }
    }

    #[test]
    fn mc_dimension_cap() {
        let p = gauss(3, 1.0, 1.0);
        let c = McConfig { dim_cap: 6, ..cfg(100, 0) };
        assert!(matches!(g_block_mc(&LabeledGraph::complete(4), &p, &c), Err(WeightError::Capacity(_))));
    }

    #[test]
    fn radial_transform_path_matches_gaussian() {
        // the Gaussian Mayer function through the numerical transform
        let r: Vec<f64> = (0..=400).map(|k| k as f64 * 0.01).collect();
        let u: Vec<f64> = r.iter().map(|&x| -(-(-PI * x * x).exp()).ln_1p()).collect();
        let mut u = u;
        u[0] = 40.0;
        let t = Tabulated::new("g", r, u).unwrap().with_radial(crate::potential::RadialConfig::default());
        let params = WeightParams::new(Arc::new(t), 2, 1.0).unwrap();
        let w = g_cycle_exact(3, &params).unwrap();
        assert_eq!(w.mode, BlockMode::CycleExact);
        assert_relative_eq!(w.value, -1.0 / 3.0, max_relative = 1e-3);
        let mc = g_block_mc(&LabeledGraph::cycle(3).unwrap(), &params, &cfg(100_000, 2)).unwrap();
        assert!((mc.value - w.value).abs() <= 3.0 * mc.std_error + 1e-4);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn exact_weight_is_relabeling_invariant(idx in 0usize..253, perm in Just((1..=5).collect::<Vec<usize>>()).prop_shuffle()) {
            let atlas = Atlas::default();
            let g = atlas.enumerate_valid(5, None).unwrap().nth(idx).unwrap();
            let h = g.relabel(&perm).unwrap();
            let a = g_block_gaussian_exact(&g, 1.0, 1.0, 2).unwrap();
            let b = g_block_gaussian_exact(&h, 1.0, 1.0, 2).unwrap();
            prop_assert_eq!(a.value.to_bits(), b.value.to_bits());
        }
    }
}
