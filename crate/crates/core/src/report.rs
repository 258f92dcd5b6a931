//! Output formats: weight and sweep CSV, oracle JSON lines, run manifests.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::thermo::SweepRow;
use crate::weights::{ClusterMode, ClusterWeight};

pub const WEIGHT_HEADER: &str = "n,mode,value,error,graphs,seconds";
pub const SWEEP_HEADER: &str = "rho,mu,regime,rho_c,rho_minus_rho_c,d2f_drho2,dp_drho";

/// Seventeen significant digits, so values survive a round trip.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Weight CSV; `seconds` is left empty unless per-row timings are given.
pub fn weight_csv(rows: &[ClusterWeight], seconds: Option<&[f64]>) -> String {
    let mut out = String::from(WEIGHT_HEADER);
    out.push('\n');
    for (k, w) in rows.iter().enumerate() {
        let secs = seconds.and_then(|s| s.get(k).copied());
        writeln!(out, "{},{},{},{},{},{}", w.n, w.mode, fmt_f64(w.value), fmt_f64(w.error), w.graphs, fmt_opt(secs)).unwrap();
    }
    out
}

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("weight CSV line {line}: {reason}")]
pub struct CsvError {
    pub line: usize,
    pub reason: String,
}

/// Reads a weight CSV back.
pub fn read_weight_csv(text: &str) -> Result<Vec<ClusterWeight>, CsvError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == WEIGHT_HEADER => {}
        _ => return Err(CsvError { line: 1, reason: format!("expected header `{WEIGHT_HEADER}`") }),
    }
    lines
        .map(|(i, l)| {
            let bad = |reason: &str| CsvError { line: i + 1, reason: reason.to_string() };
            let f: Vec<&str> = l.split(',').map(str::trim).collect();
            if f.len() != 6 {
                return Err(bad("expected 6 fields"));
            }
            Ok(ClusterWeight {
                n: f[0].parse().map_err(|_| bad("n"))?,
                mode: f[1].parse::<ClusterMode>().map_err(|_| bad("mode"))?,
                value: f[2].parse().map_err(|_| bad("value"))?,
                error: f[3].parse().map_err(|_| bad("error"))?,
                graphs: f[4].parse().map_err(|_| bad("graphs"))?,
            })
        })
        .collect()
}

/// Sweep CSV; derivative columns are empty outside the finite-cluster regime.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let s = &r.result;
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt_f64(r.rho),
            fmt_f64(s.mu),
            s.regime,
            fmt_f64(s.rho_c),
            fmt_f64(r.rho - s.rho_c),
            fmt_opt(r.f_second),
            fmt_opt(r.dp_drho)
        )
        .unwrap();
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputHash {
    pub path: String,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn hash_file(path: &Path) -> std::io::Result<InputHash> {
    let bytes = std::fs::read(path)?;
    Ok(InputHash { path: path.display().to_string(), sha256: sha256_hex(&bytes) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub params: BTreeMap<String, serde_json::Value>,
    pub seed: Option<u64>,
    pub shards: usize,
    pub version: String,
    pub wall_seconds: f64,
    pub inputs: Vec<InputHash>,
    pub output: Option<String>,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }
}

/// `<output>.manifest.json`.
pub fn manifest_path(output: &Path) -> std::path::PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::{sweep, ThermoState};
    use proptest::prelude::*;

    #[test]
    fn float_format() {
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_f64(-1.0 / 6.0), "-1.6666666666666666e-1");
        assert_eq!(fmt_f64(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn weight_csv_round_trip() {
        let rows = vec![
            ClusterWeight::trivial(1, ClusterMode::CyclesOnly).unwrap(),
            ClusterWeight::trivial(2, ClusterMode::CyclesOnly).unwrap(),
            ClusterWeight { n: 3, value: -1.0 / 6.0, mode: ClusterMode::CyclesOnly, error: 0.0, graphs: 1 },
        ];
        let text = weight_csv(&rows, None);
        assert!(text.starts_with("n,mode,value,error,graphs,seconds\n1,cycles-only,"));
        assert!(text.lines().nth(3).unwrap().ends_with(",1,"));
        assert_eq!(read_weight_csv(&text).unwrap(), rows);
        assert!(read_weight_csv("n,value\n").is_err());
    }

    #[test]
    fn sweep_rows() {
        let s = ThermoState::example(0.5, 1.0, 1.0, 1.0, 2).unwrap();
        let rows = sweep(&s, &[0.5, 1.2], None).unwrap();
        let text = sweep_csv(&rows);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], SWEEP_HEADER);
        assert!(lines[1].contains(",finite-clusters,"));
        assert!(lines[2].contains(",infinite-clusters,") && lines[2].ends_with(",,"));
    }

    #[test]
    fn manifest_naming_and_hash() {
        assert_eq!(manifest_path(Path::new("/tmp/w.csv")), Path::new("/tmp/w.csv.manifest.json"));
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    proptest! {
        #[test]
        fn formatted_floats_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
            prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }
}
