//! Cluster weights `q_n = (1/(n-1)!) Σ_{C ∈ Σ_n} Π_B g(B)`.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use super::block::{g_block_gaussian_exact, g_block_mc, g_cycle_exact, McConfig};
use super::{factorial, ClusterMode, ClusterWeight, WeightError, WeightParams};
use crate::graph::{block_decomposition, Atlas, EdgeTable, LabeledGraph};

/// Limits on a full-mode run.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Budget {
    pub max_graphs: Option<u64>,
    pub deadline: Option<Instant>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QnOptions {
    pub mode: ClusterMode,
    /// Use closed forms where available; otherwise every block is sampled.
    pub prefer_exact: bool,
    pub mc: McConfig,
    pub budget: Budget,
    pub atlas: Atlas,
}

impl Default for QnOptions {
    fn default() -> Self {
        Self { mode: ClusterMode::Full, prefer_exact: true, mc: McConfig::default(), budget: Budget::default(), atlas: Atlas::default() }
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of the sampler for one block shape.
fn shape_seed(seed: u64, shape: u64) -> u64 {
    splitmix(seed ^ splitmix(shape))
}

const CANONICAL_LIMIT: usize = 8;

/// Smallest relabeled edge mask of a compact block, tagged with its order.
/// Blocks above eight vertices keep their own labels.
fn shape_key(table: &EdgeTable, mask: u64) -> u64 {
    let k = table.n();
    let tag = (k as u64) << 56;
    if k > CANONICAL_LIMIT {
        return tag | mask;
    }
    let edges: Vec<(usize, usize)> = (0..table.len()).filter(|&e| mask >> e & 1 == 1).map(|e| table.pair(e)).collect();
    let mut perm: Vec<usize> = (0..=k).collect();
    let mut best = mask;
    let mut relabeled = |p: &[usize]| {
        let m = edges.iter().fold(0u64, |acc, &(i, j)| acc | 1 << table.index(p[i].min(p[j]), p[i].max(p[j])));
        best = best.min(m);
    };
    // Heap's algorithm over the labels 1..=k
    let mut c = vec![0usize; k + 1];
    relabeled(&perm);
    let mut i = 1;
    while i < k {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(1, i + 1);
            } else {
                perm.swap(c[i] + 1, i + 1);
            }
            relabeled(&perm);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    tag | best
}

#[derive(Debug, Clone, Copy)]
struct Factor {
    value: f64,
    std_error: f64,
    shape: u64,
}

type SharedShapes = Mutex<HashMap<u64, Arc<OnceLock<Result<(f64, f64), WeightError>>>>>;

struct Evaluator<'a> {
    params: &'a WeightParams,
    opts: &'a QnOptions,
    tables: Vec<EdgeTable>,
    shapes: SharedShapes,
    gaussian: Option<f64>,
}

impl Evaluator<'_> {
    fn compute(&self, block: &LabeledGraph, shape: u64) -> Result<(f64, f64), WeightError> {
        let p = self.params;
        if self.opts.prefer_exact {
            if let Some(lambda) = self.gaussian {
                return Ok((g_block_gaussian_exact(block, lambda, p.lambda_beta, p.d)?.value, 0.0));
            }
            if block.edge_count() == block.n() {
                return Ok((g_cycle_exact(block.n(), p)?.value, 0.0));
            }
        }
        let cfg = McConfig { seed: shape_seed(self.opts.mc.seed, shape), ..self.opts.mc };
        let w = g_block_mc(block, p, &cfg)?;
        Ok((w.value, w.std_error))
    }

    fn factor(&self, local: &mut HashMap<u64, Factor>, block: &LabeledGraph) -> Result<Factor, WeightError> {
        let k = block.n();
        let table = &self.tables[k];
        let mask = table.mask(block);
        let key = (k as u64) << 56 | mask;
        if let Some(f) = local.get(&key) {
            return Ok(*f);
        }
        let exact_closed = self.opts.prefer_exact && self.gaussian.is_some();
        let f = if exact_closed {
            let (value, std_error) = self.compute(block, key)?;
            Factor { value, std_error, shape: key }
        } else {
            let shape = shape_key(table, mask);
            let cell = {
                let mut shared = self.shapes.lock().unwrap();
                Arc::clone(shared.entry(shape).or_default())
            };
            // sample on the canonical labeling so the estimate does not depend on scheduling
            let canonical = table.graph(shape & ((1 << 56) - 1));
            let (value, std_error) = cell.get_or_init(|| self.compute(&canonical, shape)).clone()?;
            Factor { value, std_error, shape }
        };
        local.insert(key, f);
        Ok(f)
    }
}

#[derive(Default)]
struct PartialSum {
    sum: f64,
    graphs: u64,
    /// `∂(Σ g(C)) / ∂g_shape` for sampled shapes.
    sensitivity: BTreeMap<u64, f64>,
    errors: BTreeMap<u64, f64>,
    failure: Option<WeightError>,
}

/// Cluster weight `q_n` in full or cycles-only mode.
pub fn q_n(n: usize, params: &WeightParams, opts: &QnOptions) -> Result<ClusterWeight, WeightError> {
    if n == 0 {
        return Err(WeightError::Domain("n must be positive".into()));
    }
    if let Some(w) = ClusterWeight::trivial(n, opts.mode) {
        return Ok(w);
    }
    match opts.mode {
        ClusterMode::CyclesOnly => cycles_only(n, params, opts),
        ClusterMode::Full => full(n, params, opts),
        ClusterMode::FiniteL => Err(WeightError::Domain("finite-L weights need a periodized potential".into())),
    }
}

fn cycles_only(n: usize, params: &WeightParams, opts: &QnOptions) -> Result<ClusterWeight, WeightError> {
    // all (n-1)!/2 labelings share one weight
    let count = (3..n).fold(1u64, |acc, k| acc.saturating_mul(k as u64));
    let (g, err) = if opts.prefer_exact {
        (g_cycle_exact(n, params)?.value, 0.0)
    } else {
        let cycle = LabeledGraph::cycle(n)?;
        let cfg = McConfig { seed: shape_seed(opts.mc.seed, (n as u64) << 56), ..opts.mc };
        let w = g_block_mc(&cycle, params, &cfg)?;
        (w.value, w.std_error)
    };
    Ok(ClusterWeight { n, value: 0.5 * g, mode: ClusterMode::CyclesOnly, error: 0.5 * err, graphs: count })
}

fn full(n: usize, params: &WeightParams, opts: &QnOptions) -> Result<ClusterWeight, WeightError> {
    let eval = Evaluator {
        params,
        opts,
        tables: (0..=n).map(EdgeTable::new).collect(),
        shapes: Mutex::new(HashMap::new()),
        gaussian: params.potential.gaussian_length(),
    };
    let counter = AtomicU64::new(0);
    let stop = AtomicBool::new(false);
    let parts = opts.atlas.map_partitions(n, |table, masks| {
        let mut acc = PartialSum::default();
        let mut local = HashMap::new();
        let mut factors = Vec::new();
        for mask in masks {
            let seen = counter.fetch_add(1, Ordering::Relaxed) + 1;
            let over_count = opts.budget.max_graphs.is_some_and(|m| seen > m);
            let over_time = opts.budget.deadline.is_some_and(|t| Instant::now() >= t);
            if over_count || over_time || stop.load(Ordering::Relaxed) {
                stop.store(true, Ordering::Relaxed);
                break;
            }
            let g = table.graph(mask);
            let tree = match block_decomposition(&g) {
                Ok(t) => t,
                Err(e) => {
                    acc.failure = Some(e.into());
                    break;
                }
            };
            factors.clear();
            let mut product = 1.0;
            for b in &tree.blocks {
                match eval.factor(&mut local, &b.compact()) {
                    Ok(f) => {
                        product *= f.value;
                        factors.push(f);
                    }
                    Err(e) => {
                        acc.failure = Some(e);
                        break;
                    }
                }
            }
            if acc.failure.is_some() {
                break;
            }
            acc.sum += product;
            acc.graphs += 1;
            for f in factors.iter().filter(|f| f.std_error > 0.0) {
                // d(product)/d(g_f) counts repeated shapes once per occurrence
                let rest: f64 = product / f.value;
                *acc.sensitivity.entry(f.shape).or_default() += rest;
                acc.errors.insert(f.shape, f.std_error);
            }
        }
        acc
    })?;
    let mut sum = 0.0;
    let mut graphs = 0;
    let mut sensitivity: BTreeMap<u64, f64> = BTreeMap::new();
    let mut errors = BTreeMap::new();
    for p in parts {
        if let Some(e) = p.failure {
            return Err(e);
        }
        sum += p.sum;
        graphs += p.graphs;
        for (k, v) in p.sensitivity {
            *sensitivity.entry(k).or_default() += v;
        }
        errors.extend(p.errors);
    }
    if stop.load(Ordering::Relaxed) {
        return Err(WeightError::Partial { completed: graphs });
    }
    let norm = factorial(n - 1);
    let var: f64 = sensitivity.iter().map(|(k, s)| (s * errors[k]).powi(2)).fold(0.0, |a, x| a + x);
    Ok(ClusterWeight { n, value: sum / norm, mode: ClusterMode::Full, error: var.sqrt() / norm, graphs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{GaussianExample, ZeroPotential};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn gauss(d: usize) -> WeightParams {
        WeightParams::new(Arc::new(GaussianExample::new(1.0).unwrap()), d, 1.0).unwrap()
    }

    fn opts(mode: ClusterMode) -> QnOptions {
        QnOptions { mode, ..QnOptions::default() }
    }

    #[test]
    fn trivial_orders() {
        let p = gauss(2);
        for mode in [ClusterMode::Full, ClusterMode::CyclesOnly] {
            assert_eq!(q_n(1, &p, &opts(mode)).unwrap().value, 1.0);
            assert_eq!(q_n(2, &p, &opts(mode)).unwrap().value, 0.0);
        }
        assert!(q_n(0, &p, &opts(ClusterMode::Full)).is_err());
    }

    #[test]
    fn cycles_only_formula() {
        for d in 1..=3 {
            let p = gauss(d);
            for n in 3..=9 {
                let w = q_n(n, &p, &opts(ClusterMode::CyclesOnly)).unwrap();
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                assert_relative_eq!(w.value, sign / (2.0 * (n as f64).powf(d as f64 / 2.0)), max_relative = 1e-14);
            }
        }
        assert_relative_eq!(q_n(3, &gauss(2), &opts(ClusterMode::CyclesOnly)).unwrap().value, -1.0 / 6.0, max_relative = 1e-15);
        assert_eq!(q_n(6, &gauss(2), &opts(ClusterMode::CyclesOnly)).unwrap().graphs, 60);
    }

    #[test]
    fn full_q4_is_one_over_96() {
        let w = q_n(4, &gauss(2), &opts(ClusterMode::Full)).unwrap();
        assert_relative_eq!(w.value, 1.0 / 96.0, max_relative = 1e-14);
        assert_eq!(w.graphs, 10);
        assert_relative_eq!(q_n(3, &gauss(2), &opts(ClusterMode::Full)).unwrap().value, -1.0 / 6.0, max_relative = 1e-15);
    }

    #[test]
    fn full_matches_whole_graph_closed_form() {
        // block product equals the closed form applied to the whole graph
        let p = gauss(3);
        let atlas = Atlas::default();
        let direct: f64 = atlas
            .enumerate_valid(5, None)
            .unwrap()
            .map(|g| {
                let tau = crate::graph::count_spanning_trees(&g).unwrap() as f64;
                let sign = if g.edge_count() % 2 == 0 { 1.0 } else { -1.0 };
                sign * tau.powf(-1.5)
            })
            .sum::<f64>()
            / 24.0;
        assert_relative_eq!(q_n(5, &p, &opts(ClusterMode::Full)).unwrap().value, direct, max_relative = 1e-13);
    }

    #[test]
    fn mc_full_q4_within_error() {
        let mc = QnOptions { prefer_exact: false, mc: McConfig { samples: 100_000, seed: 9, ..McConfig::default() }, ..opts(ClusterMode::Full) };
        let w = q_n(4, &gauss(2), &mc).unwrap();
        assert!((w.value - 1.0 / 96.0).abs() <= 3.0 * w.error, "{w:?}");
        assert!(w.error > 0.0);
    }

    #[test]
    fn mc_full_weight_ignores_thread_count() {
        let o = QnOptions { prefer_exact: false, mc: McConfig { samples: 5_000, seed: 4, ..McConfig::default() }, ..opts(ClusterMode::Full) };
        let run = |t: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(t).build().unwrap();
            pool.install(|| q_n(5, &gauss(2), &o).unwrap())
        };
        let one = run(1);
        for t in [2, 5] {
            let other = run(t);
            assert_eq!(one.value.to_bits(), other.value.to_bits());
            assert_eq!(one.error.to_bits(), other.error.to_bits());
        }
    }

    #[test]
    fn zero_potential_full_mode() {
        let p = WeightParams::new(Arc::new(ZeroPotential), 2, 1.0).unwrap();
        let w = q_n(4, &p, &QnOptions { prefer_exact: false, ..opts(ClusterMode::Full) }).unwrap();
        assert_eq!(w.value, 0.0);
    }

    #[test]
    fn budget_reports_partial_count() {
        let o = QnOptions { budget: Budget { max_graphs: Some(100), deadline: None }, ..opts(ClusterMode::Full) };
        match q_n(5, &gauss(2), &o) {
            Err(WeightError::Partial { completed }) => assert!(completed <= 100),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn shape_keys_ignore_labels() {
        let t = EdgeTable::new(4);
        let a = t.mask(&LabeledGraph::new(4, [(1, 2), (2, 3), (3, 4), (1, 4)]).unwrap());
        let b = t.mask(&LabeledGraph::new(4, [(1, 3), (2, 3), (2, 4), (1, 4)]).unwrap());
        let c = t.mask(&LabeledGraph::complete(4));
        assert_eq!(shape_key(&t, a), shape_key(&t, b));
        assert_ne!(shape_key(&t, a), shape_key(&t, c));
    }
}
