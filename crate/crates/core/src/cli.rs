//! Command-line front end.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::graph::{Atlas, GraphError, LabeledGraph};
use crate::momentum::{certify_infeasible, construct_assignment, MomentumError};
use crate::oracle::{
    limit_factor_check, q_direct, q_momentum, recurrence_residual, timed, DirectMethod, FiniteSystem, MomentumConfig, OracleError,
    OracleRecord, RecurrenceConfig,
};
use crate::potential::{fourier_vhat, parse_potential, EHatTable, PairPotential, PeriodizedPotential, PotentialError};
use crate::report::{self, fmt_f64, hash_file, InputHash, RunManifest};
use crate::thermo::{a_bar, mu_bar, rho_c, sweep, ABar, MuBar, Regime, ThermoError, ThermoState, WeightSource};
use crate::weights::{default_zmax, q_n, q_n_finite_L, Budget, ClusterMode, McConfig, QnOptions, WeightError, WeightParams};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;
pub const EXIT_ACCURACY: i32 = 4;
pub const EXIT_INCONSISTENT: i32 = 5;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    fn usage(message: impl Into<String>) -> Self {
        Self::new(EXIT_USAGE, message)
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        let code = match e {
            GraphError::Capacity { .. } => EXIT_CAPACITY,
            GraphError::Bridge(..) | GraphError::Disconnected | GraphError::Invalid(_) => EXIT_INCONSISTENT,
            _ => EXIT_USAGE,
        };
        Self::new(code, e.to_string())
    }
}

impl From<PotentialError> for CliError {
    fn from(e: PotentialError) -> Self {
        let code = match e {
            PotentialError::Accuracy { .. } => EXIT_ACCURACY,
            PotentialError::Io(_) => 1,
            _ => EXIT_USAGE,
        };
        Self::new(code, e.to_string())
    }
}

impl From<WeightError> for CliError {
    fn from(e: WeightError) -> Self {
        let code = match &e {
            WeightError::Capacity(_) | WeightError::Partial { .. } => EXIT_CAPACITY,
            WeightError::Accuracy { .. } | WeightError::Diagnostics { .. } => EXIT_ACCURACY,
            WeightError::Inconsistent(_) => EXIT_INCONSISTENT,
            WeightError::Graph(g) => return g.clone().into(),
            WeightError::Potential(p) => return p.clone().into(),
            WeightError::Unsupported(_) | WeightError::Domain(_) => EXIT_USAGE,
        };
        Self::new(code, e.to_string())
    }
}

impl From<ThermoError> for CliError {
    fn from(e: ThermoError) -> Self {
        let code = match &e {
            ThermoError::Inconsistent(_) | ThermoError::Stability(_) => EXIT_INCONSISTENT,
            ThermoError::Domain(_) => EXIT_USAGE,
            ThermoError::Divergent(_) => 1,
            ThermoError::Weights(w) => return w.clone().into(),
        };
        Self::new(code, e.to_string())
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Capacity(m) => Self::new(EXIT_CAPACITY, format!("capacity: {m}")),
            OracleError::Accuracy { .. } => Self::new(EXIT_ACCURACY, e.to_string()),
            OracleError::Domain(m) => Self::usage(m),
            OracleError::Weights(w) => w.into(),
            OracleError::Potential(p) => p.into(),
        }
    }
}

impl From<MomentumError> for CliError {
    fn from(e: MomentumError) -> Self {
        Self::new(EXIT_INCONSISTENT, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new(1, e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "dualcluster", version, about = "Valid cluster graphs, cluster weights, density equation and finite-volume oracles")]
struct Cli {
    /// Plain `key=value` file; flags on the command line take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Work partitions; results do not depend on this.
    #[arg(long, global = true)]
    shards: Option<usize>,
    /// Output file (stdout when absent); a manifest is written next to it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Record per-row wall times in the output.
    #[arg(long, global = true)]
    timings: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug, Serialize)]
enum Cmd {
    /// Write the valid cluster graphs on n labeled vertices.
    Atlas(AtlasArgs),
    /// Cluster weights q_1..q_{n-max} as CSV.
    Qn(QnArgs),
    /// Critical density of the chosen weight source.
    Critical(ThermoArgs),
    /// Solve the density equation at one density.
    Solve(SolveArgs),
    /// Solve along a density grid.
    Sweep(SweepArgs),
    /// Brute-force finite-volume checks.
    #[command(subcommand)]
    Oracle(OracleCmd),
    /// Build momentum assignments on sampled graphs and certify bridged ones.
    LemmaCheck(LemmaArgs),
}

#[derive(Args, Debug, Serialize)]
struct AtlasArgs {
    #[arg(long)]
    n: usize,
    /// Only the Hamiltonian cycles.
    #[arg(long)]
    cycles_only: bool,
    #[arg(long)]
    limit: Option<usize>,
    #[arg(long, default_value_t = 9)]
    ceiling: usize,
}

#[derive(Args, Debug, Serialize)]
struct QnArgs {
    #[arg(long, default_value = "gaussian{lambda=1}")]
    potential: String,
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 1.0)]
    lambda_beta: f64,
    #[arg(long)]
    n_max: usize,
    /// full, cycles-only or finite-L.
    #[arg(long, default_value = "full")]
    mode: String,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sample every block, even where a closed form exists.
    #[arg(long)]
    mc: bool,
    #[arg(long)]
    max_graphs: Option<u64>,
    /// Box side for finite-L weights.
    #[arg(long = "L")]
    l: Option<f64>,
    #[arg(long)]
    zmax: Option<i64>,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Args, Debug, Serialize)]
struct ThermoArgs {
    #[arg(long, default_value = "gaussian{lambda=1}")]
    potential: String,
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 1.0)]
    lambda_beta: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Weight CSV to use instead of the closed-form example weights.
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long, default_value_t = 64)]
    n_max: usize,
}

#[derive(Args, Debug, Serialize)]
struct SolveArgs {
    #[command(flatten)]
    thermo: ThermoArgs,
    #[arg(long)]
    rho: f64,
}

#[derive(Args, Debug, Serialize)]
struct SweepArgs {
    #[command(flatten)]
    thermo: ThermoArgs,
    /// Explicit comma-separated densities.
    #[arg(long, value_delimiter = ',')]
    rhos: Vec<f64>,
    #[arg(long, default_value_t = 0.05)]
    rho_min: f64,
    #[arg(long, default_value_t = 1.5)]
    rho_max: f64,
    #[arg(long, default_value_t = 30)]
    points: usize,
}

#[derive(Args, Debug, Serialize)]
struct SystemArgs {
    #[arg(long = "N")]
    n: usize,
    #[arg(long = "L")]
    l: f64,
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long, default_value = "gaussian{lambda=1}")]
    potential: String,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda_beta: f64,
}

#[derive(Subcommand, Debug, Serialize)]
enum OracleCmd {
    /// Q_{N,L} by position-space integration.
    Direct {
        #[command(flatten)]
        sys: SystemArgs,
        #[arg(long, default_value_t = 4096)]
        points: usize,
        /// Use Monte Carlo with this many samples instead of the grid.
        #[arg(long)]
        mc_samples: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Q_{N,L} by the constrained momentum sum.
    Momentum {
        #[command(flatten)]
        sys: SystemArgs,
        #[arg(long, default_value_t = 64)]
        zmax: i64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        allow_four: bool,
    },
    /// Relative residual of the finite-volume recurrence.
    Recurrence {
        #[command(flatten)]
        sys: SystemArgs,
        #[arg(long, default_value_t = 4096)]
        points: usize,
        #[arg(long, default_value_t = 64)]
        zmax: i64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Ê_L(0)^{n(N-n)} against its infinite-volume limit along a ladder of boxes.
    LimitFactor {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        rho: f64,
        #[arg(long, default_value_t = 1)]
        d: usize,
        #[arg(long, default_value = "gaussian{lambda=1}")]
        potential: String,
        #[arg(long, value_delimiter = ',', default_value = "8,16,32")]
        ladder: Vec<f64>,
    },
}

#[derive(Args, Debug, Serialize)]
struct LemmaArgs {
    /// Largest graph order sampled.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dimension of the momentum vectors.
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Write the constructed assignments here.
    #[arg(long)]
    assignments: Option<PathBuf>,
}

/// Output body plus the bookkeeping for its manifest.
struct Output {
    body: String,
    seed: Option<u64>,
    inputs: Vec<PathBuf>,
    /// Exit code after the output is written.
    status: i32,
}

impl Output {
    fn ok(body: String) -> Self {
        Self { body, seed: None, inputs: Vec::new(), status: 0 }
    }
}

/// Inserts `--key value` for config entries the command line does not set.
fn apply_config(argv: Vec<OsString>) -> Result<(Vec<OsString>, Option<PathBuf>), CliError> {
    let strs: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut path = None;
    for (i, a) in strs.iter().enumerate() {
        if a == "--config" {
            path = strs.get(i + 1).map(PathBuf::from);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        }
    }
    let Some(path) = path else { return Ok((argv, None)) };
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
    // subcommand path: first one or two positional tokens
    let mut insert_at = 1;
    let mut k = 1;
    while k < strs.len() {
        if strs[k] == "--config" || strs[k] == "--out" || strs[k] == "--shards" {
            k += 2;
            continue;
        }
        if strs[k].starts_with('-') {
            k += 1;
            continue;
        }
        insert_at = k + 1;
        if strs[k] == "oracle"
            && strs.get(k + 1).is_some_and(|s| !s.starts_with('-')) {
                insert_at = k + 2;
            }
        break;
    }
    let mut extra = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("config line {}: expected key=value", lineno + 1)))?;
        let key = key.trim().replace('_', "-");
        let flag = format!("--{key}");
        if strs.iter().any(|a| a == &flag || a.starts_with(&format!("{flag}="))) {
            continue;
        }
        match value.trim() {
            "true" => extra.push(OsString::from(flag)),
            "false" => {}
            v => {
                extra.push(OsString::from(flag));
                extra.push(OsString::from(v));
            }
        }
    }
    let mut out = argv;
    let at = insert_at.min(out.len());
    out.splice(at..at, extra);
    Ok((out, Some(path)))
}

/// Runs the CLI and returns the process exit code.
pub fn run(argv: Vec<OsString>) -> i32 {
    let (argv, config) = match apply_config(argv) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {}", e.message);
            return e.code;
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let shards = cli.shards.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)).max(1);
    let cap = std::env::var("DUALCLUSTER_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).filter(|&v| v > 0);
    let threads = cap.map_or(shards, |c| c.min(shards));
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let start = Instant::now();
    let result = pool.install(|| dispatch(&cli));
    match result.and_then(|out| finish(&cli, config, shards, start, out)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn command_name(cmd: &Cmd) -> &'static str {
    match cmd {
        Cmd::Atlas(_) => "atlas",
        Cmd::Qn(_) => "qn",
        Cmd::Critical(_) => "critical",
        Cmd::Solve(_) => "solve",
        Cmd::Sweep(_) => "sweep",
        Cmd::Oracle(OracleCmd::Direct { .. }) => "oracle direct",
        Cmd::Oracle(OracleCmd::Momentum { .. }) => "oracle momentum",
        Cmd::Oracle(OracleCmd::Recurrence { .. }) => "oracle recurrence",
        Cmd::Oracle(OracleCmd::LimitFactor { .. }) => "oracle limit-factor",
        Cmd::LemmaCheck(_) => "lemma-check",
    }
}

fn finish(cli: &Cli, config: Option<PathBuf>, shards: usize, start: Instant, out: Output) -> Result<i32, CliError> {
    match &cli.out {
        None => print!("{}", out.body),
        Some(path) => {
            std::fs::write(path, &out.body)?;
            let mut inputs: Vec<InputHash> = Vec::new();
            for p in config.iter().chain(&out.inputs) {
                inputs.push(hash_file(p)?);
            }
            let params = match serde_json::to_value(&cli.cmd).expect("arguments serialize") {
                serde_json::Value::Object(m) => flatten_params(m),
                _ => BTreeMap::new(),
            };
            let manifest = RunManifest {
                command: command_name(&cli.cmd).to_string(),
                params,
                seed: out.seed,
                shards,
                version: env!("CARGO_PKG_VERSION").to_string(),
                wall_seconds: start.elapsed().as_secs_f64(),
                inputs,
                output: Some(path.display().to_string()),
            };
            std::fs::write(report::manifest_path(path), manifest.to_json())?;
        }
    }
    Ok(out.status)
}

/// Unwraps the enum tag layers so parameters sit at the top level.
fn flatten_params(m: serde_json::Map<String, serde_json::Value>) -> BTreeMap<String, serde_json::Value> {
    let mut out = BTreeMap::new();
    fn walk(v: serde_json::Value, out: &mut BTreeMap<String, serde_json::Value>) {
        if let serde_json::Value::Object(m) = v {
            for (k, v) in m {
                if v.is_object() {
                    walk(v, out);
                } else {
                    out.insert(k, v);
                }
            }
        }
    }
    walk(serde_json::Value::Object(m), &mut out);
    out
}

fn dispatch(cli: &Cli) -> Result<Output, CliError> {
    match &cli.cmd {
        Cmd::Atlas(a) => cmd_atlas(a),
        Cmd::Qn(a) => cmd_qn(a, cli.timings),
        Cmd::Critical(a) => cmd_critical(a),
        Cmd::Solve(a) => {
            let (state, pot, inputs) = thermo_state(&a.thermo, a.rho)?;
            let rows = sweep(&state, &[a.rho], Some(pot.as_ref()))?;
            sweep_output(rows, inputs)
        }
        Cmd::Sweep(a) => {
            let rhos: Vec<f64> = if a.rhos.is_empty() {
                if a.points < 2 || !(a.rho_max > a.rho_min) {
                    return Err(CliError::usage("sweep needs --points ≥ 2 and --rho-max > --rho-min"));
                }
                (0..a.points).map(|k| a.rho_min + (a.rho_max - a.rho_min) * k as f64 / (a.points - 1) as f64).collect()
            } else {
                a.rhos.clone()
            };
            let (state, pot, inputs) = thermo_state(&a.thermo, rhos[0])?;
            let rows = sweep(&state, &rhos, Some(pot.as_ref()))?;
            sweep_output(rows, inputs)
        }
        Cmd::Oracle(o) => cmd_oracle(o, cli.timings),
        Cmd::LemmaCheck(a) => cmd_lemma(a),
    }
}

fn potential_inputs(spec: &str) -> Vec<PathBuf> {
    spec.split_once("file=")
        .map(|(_, rest)| PathBuf::from(rest.split([',', '}']).next().unwrap_or("").trim()))
        .into_iter()
        .collect()
}

fn cmd_atlas(a: &AtlasArgs) -> Result<Output, CliError> {
    let atlas = Atlas::new(a.ceiling)?;
    let graphs: Vec<LabeledGraph> = if a.cycles_only {
        atlas.enumerate_cycles_only(a.n)?.take(a.limit.unwrap_or(usize::MAX)).collect()
    } else {
        atlas.enumerate_valid(a.n, a.limit)?.collect()
    };
    let mut body = String::new();
    for g in &graphs {
        body.push_str(&g.to_string());
        body.push('\n');
    }
    eprintln!("n={} graphs={}", a.n, graphs.len());
    Ok(Output::ok(body))
}

fn cmd_qn(a: &QnArgs, timings: bool) -> Result<Output, CliError> {
    let mode: ClusterMode = a.mode.parse().map_err(|_| CliError::usage(format!("unknown mode `{}`", a.mode)))?;
    let pot = parse_potential(&a.potential)?;
    let params = WeightParams::new(Arc::clone(&pot), a.d, a.lambda_beta)?;
    if a.n_max == 0 {
        return Err(CliError::usage("--n-max must be positive"));
    }
    let mut rows = Vec::new();
    let mut secs = Vec::new();
    match mode {
        ClusterMode::FiniteL => {
            let l = a.l.ok_or_else(|| CliError::usage("finite-L weights need --L"))?;
            let periodic = PeriodizedPotential::new(Arc::clone(&pot), l, 1.0)?;
            let zmax = match (a.zmax, pot.gaussian_length()) {
                (Some(z), _) => z,
                (None, Some(lambda)) => default_zmax(lambda, l, a.d, 1e-13),
                (None, None) => return Err(CliError::usage("--zmax is required for this potential")),
            };
            let reach = if a.n_max >= 4 { 3 * zmax } else { zmax };
            let path = crate::oracle::auto_path(&periodic, a.d, reach, 1e-14);
            let table = EHatTable::build(&periodic, a.d, reach, path, 1e-10)?;
            for n in 1..=a.n_max {
                let (w, s) = timed(|| q_n_finite_L(n, &periodic, &table, a.lambda_beta, zmax, a.tol));
                rows.push(w?);
                secs.push(s);
            }
        }
        _ => {
            let opts = QnOptions {
                mode,
                prefer_exact: !a.mc,
                mc: McConfig { samples: a.samples, seed: a.seed, ..McConfig::default() },
                budget: Budget { max_graphs: a.max_graphs, deadline: None },
                ..QnOptions::default()
            };
            for n in 1..=a.n_max {
                let (w, s) = timed(|| q_n(n, &params, &opts));
                rows.push(w?);
                secs.push(s);
            }
        }
    }
    let body = report::weight_csv(&rows, timings.then_some(secs.as_slice()));
    Ok(Output { body, seed: Some(a.seed), inputs: potential_inputs(&a.potential), status: 0 })
}

fn thermo_state(a: &ThermoArgs, rho: f64) -> Result<(ThermoState, Arc<dyn PairPotential>, Vec<PathBuf>), CliError> {
    let pot = parse_potential(&a.potential)?;
    let mut inputs = potential_inputs(&a.potential);
    let vhat0 = if pot.is_zero() { 0.0 } else { fourier_vhat(pot.as_ref(), &vec![0.0; a.d])? };
    let source = match (&a.weights, pot.is_zero(), pot.gaussian_length()) {
        (Some(path), _, _) => {
            let text = std::fs::read_to_string(path)?;
            let ws = report::read_weight_csv(&text).map_err(|e| CliError::usage(e.to_string()))?;
            inputs.push(path.clone());
            WeightSource::from_weights(&ws)?
        }
        (None, true, _) => WeightSource::Ideal,
        (None, false, Some(lambda)) => WeightSource::CyclesOnlyGaussian { lambda },
        (None, false, None) => return Err(CliError::usage("this potential needs a weight table (--weights)")),
    };
    let mut state = ThermoState::new(rho, a.beta, a.lambda_beta, a.d, vhat0, source)?;
    state.n_max = a.n_max;
    Ok((state, pot, inputs))
}

fn cmd_critical(a: &ThermoArgs) -> Result<Output, CliError> {
    let (state, _, inputs) = thermo_state(a, 0.0)?;
    let abar = match a_bar(&state)? {
        ABar::Finite(v) => v,
        ABar::Divergent => f64::INFINITY,
    };
    let eps = match mu_bar(&state)? {
        MuBar::Finite(m) => m,
        MuBar::Infinite => f64::INFINITY,
    };
    let rc = rho_c(&state)?;
    let body = format!(
        "d,source,a_bar,rho_c,mu_bar_at_zero_density\n{},{},{},{},{}\n",
        a.d,
        state.source.label().replace(',', ";"),
        fmt_f64(abar),
        fmt_f64(rc),
        fmt_f64(eps)
    );
    Ok(Output { body, seed: None, inputs, status: 0 })
}

fn sweep_output(rows: Vec<crate::thermo::SweepRow>, inputs: Vec<PathBuf>) -> Result<Output, CliError> {
    let checked: Vec<_> = rows.iter().filter_map(|r| r.bounds.as_ref()).collect();
    let held = checked.iter().filter(|b| b.holds).count();
    for notice in checked.first().map(|b| b.notices.clone()).unwrap_or_default() {
        eprintln!("notice: {notice}");
    }
    eprintln!("activity bounds hold at {held}/{} points", checked.len());
    if let Some(r) = rows.iter().find(|r| r.result.regime == Regime::InfiniteClusters) {
        eprintln!("infinite clusters from rho = {} (density in infinite clusters {})", fmt_f64(r.rho), fmt_f64(r.result.infinite_cluster_density));
    }
    let status = if held == checked.len() { 0 } else { EXIT_INCONSISTENT };
    if status != 0 {
        eprintln!("error: activity bounds violated");
    }
    Ok(Output { body: report::sweep_csv(&rows), seed: None, inputs, status })
}

fn system(s: &SystemArgs) -> Result<(FiniteSystem, Vec<PathBuf>), CliError> {
    let pot = parse_potential(&s.potential)?;
    Ok((FiniteSystem::new(s.n, s.l, s.d, s.beta, s.lambda_beta, pot)?, potential_inputs(&s.potential)))
}

fn cmd_oracle(o: &OracleCmd, timings: bool) -> Result<Output, CliError> {
    let record = |task: &str, sys: &FiniteSystem, value: f64, error: f64, method: String, secs: f64| OracleRecord {
        task: task.to_string(),
        n: sys.n,
        l: sys.l(),
        d: sys.d,
        value,
        error,
        method,
        seconds: timings.then_some(secs),
    };
    match o {
        OracleCmd::Direct { sys, points, mc_samples, seed } => {
            let (sys, inputs) = system(sys)?;
            let method = match mc_samples {
                Some(samples) => DirectMethod::MonteCarlo { samples: *samples, seed: *seed },
                None => DirectMethod::Grid { points: *points },
            };
            let (v, secs) = timed(|| q_direct(&sys, method));
            let v = v?;
            let line = record("direct", &sys, v.value, v.error, v.method, secs).to_line();
            Ok(Output { body: line + "\n", seed: mc_samples.map(|_| *seed), inputs, status: 0 })
        }
        OracleCmd::Momentum { sys, zmax, tol, allow_four } => {
            let (sys, inputs) = system(sys)?;
            let cfg = MomentumConfig { zmax: *zmax, tol: *tol, allow_four: *allow_four };
            let (v, secs) = timed(|| q_momentum(&sys, cfg));
            let v = v?;
            let line = record("momentum", &sys, v.value, v.error, v.method, secs).to_line();
            Ok(Output { body: line + "\n", seed: None, inputs, status: 0 })
        }
        OracleCmd::Recurrence { sys, points, zmax, tol } => {
            let (sys, inputs) = system(sys)?;
            let cfg = RecurrenceConfig { points: *points, zmax: *zmax, tol: *tol };
            let (r, secs) = timed(|| recurrence_residual(&sys, cfg));
            let r = r?;
            let budget = (r.lhs_error + r.rhs_error) / r.lhs.abs();
            let method = format!("grid{{points={points}}}+lattice{{zmax={zmax}}};factor=E_L(0)");
            let line = record("recurrence", &sys, r.residual, budget, method, secs).to_line();
            eprintln!("lhs={} rhs={} E_L(0)={}", fmt_f64(r.lhs), fmt_f64(r.rhs), fmt_f64(r.e0));
            let status = if !r.conclusive {
                eprintln!("inconclusive: error budget {} exceeds tolerance {}", fmt_f64(budget), fmt_f64(*tol));
                EXIT_ACCURACY
            } else if r.residual > *tol {
                eprintln!("recurrence residual {} exceeds tolerance {}", fmt_f64(r.residual), fmt_f64(*tol));
                EXIT_INCONSISTENT
            } else {
                0
            };
            Ok(Output { body: line + "\n", seed: None, inputs, status })
        }
        OracleCmd::LimitFactor { n, rho, d, potential, ladder } => {
            let pot = parse_potential(potential)?;
            let (rep, secs) = timed(|| limit_factor_check(*n, *rho, pot, *d, ladder));
            let rep = rep?;
            let mut body = String::new();
            for row in &rep.rows {
                let rec = OracleRecord {
                    task: "limit-factor".into(),
                    n: row.big_n.round() as usize,
                    l: row.l,
                    d: *d,
                    value: row.factor,
                    error: row.gap,
                    method: format!("n={n};target={}", fmt_f64(row.target)),
                    seconds: timings.then_some(secs),
                };
                body.push_str(&rec.to_line());
                body.push('\n');
            }
            if !rep.monotone {
                eprintln!("gap does not shrink monotonically along the ladder");
            }
            Ok(Output { body, seed: None, inputs: potential_inputs(potential), status: if rep.monotone { 0 } else { EXIT_INCONSISTENT } })
        }
    }
}

/// Random graph on `n` vertices with edge probability `p`.
fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> LabeledGraph {
    let mut edges = Vec::new();
    for i in 1..=n {
        for j in i + 1..=n {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    LabeledGraph::new(n, edges).expect("sorted simple edges")
}

fn cmd_lemma(a: &LemmaArgs) -> Result<Output, CliError> {
    if a.n < 3 {
        return Err(CliError::usage("--n must be at least 3"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut body = String::from("trial,kind,graph,result\n");
    let mut dump = String::new();
    let mut failures = 0;
    for t in 0..a.trials {
        let n = rng.random_range(3..=a.n);
        let g = loop {
            let g = random_graph(&mut rng, n, 0.5);
            if g.is_valid() {
                break g;
            }
        };
        let sub_seed = rng.random::<u64>();
        let result = match construct_assignment(&g, a.d, sub_seed) {
            Ok(asg) if asg.is_balanced() && asg.all_nonzero() => {
                dump.push_str(&format!("{g}\n{asg}"));
                "balanced-nonzero".to_string()
            }
            Ok(_) => {
                failures += 1;
                "FAILED constraint check".to_string()
            }
            Err(e) => {
                failures += 1;
                format!("FAILED {e}")
            }
        };
        body.push_str(&format!("{t},valid,\"{g}\",{result}\n"));
    }
    for t in 0..a.trials {
        let n = rng.random_range(2..=a.n);
        let g = loop {
            let g = random_graph(&mut rng, n, 0.4);
            if g.is_connected() && !g.bridges().is_empty() {
                break g;
            }
        };
        let result = match certify_infeasible(&g) {
            Some(c) => format!("certified-bridge {}-{} rank {}", c.edge.0, c.edge.1, c.constraint_rank),
            None => {
                failures += 1;
                "FAILED no certificate".to_string()
            }
        };
        body.push_str(&format!("{t},bridged,\"{g}\",{result}\n"));
    }
    if let Some(path) = &a.assignments {
        std::fs::write(path, dump)?;
    }
    let status = if failures == 0 { 0 } else { EXIT_INCONSISTENT };
    if failures > 0 {
        eprintln!("error: {failures} lemma checks failed");
    }
    Ok(Output { body, seed: Some(a.seed), inputs: Vec::new(), status })
}
