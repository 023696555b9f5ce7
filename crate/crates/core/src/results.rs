//! Result persistence: BER-curve CSVs, latency CSVs, plot-data exports, and
//! a JSON manifest describing the run.
//!
//! Formats are fixed:
//!
//! * Curve CSV header: `ebn0_db,ber,fer,bit_errors,bits_tested,frames,censored`.
//!   Floats are written in shortest round-trip form, so read-back is exact.
//! * Timing CSV header: `decoder,frames,mean_ns,p50_ns,p99_ns`.
//! * Plot CSV header: `series,ebn0_db,ber` (long format, one series per
//!   decoder/run).
//! * Manifest: JSON object with `schema_version`, `config_hash` (SHA-256 of
//!   the canonical config JSON), `seed`, `git_describe`, `wall_time_s`, and
//!   `created_unix_ms`. Timestamps live only here, so re-running a command
//!   with the same config and seed reproduces every other artifact byte for
//!   byte.

use crate::eval::{BerCurve, BerPoint, TimingRecord};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ResultsError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed curve CSV at line {line}: {why}")]
    BadCsv { line: usize, why: String },
    #[error("manifest serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> ResultsError + '_ {
    move |source| ResultsError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub const CURVE_CSV_HEADER: &str = "ebn0_db,ber,fer,bit_errors,bits_tested,frames,censored";

/// Render a curve as CSV, header included.
pub fn curve_to_csv(curve: &BerCurve) -> String {
    let mut out = String::new();
    out.push_str(CURVE_CSV_HEADER);
    out.push('\n');
    for p in &curve.points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            p.ebn0_db, p.ber, p.fer, p.bit_errors, p.bits_tested, p.frames_tested, p.censored
        );
    }
    out
}

/// Parse a curve CSV produced by [`curve_to_csv`]. The decoder label is not
/// stored in the file; the caller supplies it (usually from the file name).
pub fn curve_from_csv(decoder: &str, text: &str) -> Result<BerCurve, ResultsError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CURVE_CSV_HEADER => {}
        other => {
            return Err(ResultsError::BadCsv {
                line: 1,
                why: format!("unexpected header {:?}", other.map(|(_, h)| h)),
            })
        }
    }
    let mut points = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(ResultsError::BadCsv {
                line: idx + 1,
                why: format!("expected 7 fields, got {}", fields.len()),
            });
        }
        let bad = |why: &str| ResultsError::BadCsv {
            line: idx + 1,
            why: why.into(),
        };
        let ebn0_db: f64 = fields[0].parse().map_err(|_| bad("ebn0_db"))?;
        let ber: f64 = fields[1].parse().map_err(|_| bad("ber"))?;
        let fer: f64 = fields[2].parse().map_err(|_| bad("fer"))?;
        let bit_errors: u64 = fields[3].parse().map_err(|_| bad("bit_errors"))?;
        let bits_tested: u64 = fields[4].parse().map_err(|_| bad("bits_tested"))?;
        let frames_tested: u64 = fields[5].parse().map_err(|_| bad("frames"))?;
        let censored: bool = fields[6].parse().map_err(|_| bad("censored"))?;
        points.push(BerPoint {
            ebn0_db,
            bit_errors,
            frame_errors: (fer * frames_tested as f64).round() as u64,
            bits_tested,
            frames_tested,
            ber,
            fer,
            censored,
        });
    }
    Ok(BerCurve {
        decoder: decoder.to_string(),
        points,
    })
}

pub const TIMING_CSV_HEADER: &str = "decoder,frames,mean_ns,p50_ns,p99_ns";

pub fn timings_to_csv(records: &[TimingRecord]) -> String {
    let mut out = String::new();
    out.push_str(TIMING_CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.decoder_tag,
            r.frames,
            r.mean_latency.as_nanos(),
            r.p50.as_nanos(),
            r.p99.as_nanos()
        );
    }
    out
}

/// Long-format plot export: one `(series, ebn0_db, ber)` row per point, in
/// the order given.
pub fn plot_data_csv(series: &[(&str, &BerCurve)]) -> String {
    let mut out = String::from("series,ebn0_db,ber\n");
    for (label, curve) in series {
        for p in &curve.points {
            let _ = writeln!(out, "{},{},{}", label, p.ebn0_db, p.ber);
        }
    }
    out
}

/// SHA-256 over the canonical JSON encoding of a config value. Two configs
/// hash equal exactly when every field is equal (serde_json orders object
/// keys deterministically).
pub fn config_hash(config: &serde_json::Value) -> String {
    let canonical = serde_json::to_string(config).expect("config is valid JSON");
    let mut h = Sha256::new();
    h.update(canonical.as_bytes());
    hex_string(&h.finalize())
}

fn hex_string(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// `git describe --always --dirty`, or `"unknown"` outside a repository.
pub fn git_describe() -> String {
    std::process::Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub schema_version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub git_describe: String,
    pub wall_time_s: f64,
    pub created_unix_ms: u128,
}

impl RunManifest {
    pub fn new(config: &serde_json::Value, seed: u64, wall_time: Duration) -> Self {
        Self {
            schema_version: 1,
            config_hash: config_hash(config),
            seed,
            git_describe: git_describe(),
            wall_time_s: wall_time.as_secs_f64(),
            created_unix_ms: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_millis())
                .unwrap_or(0),
        }
    }
}

/// Write curves, timings, and the manifest under `dir`:
/// `curves/<decoder>.csv`, `timings/latency.csv`,
/// `manifests/manifest.json`. Returns the paths written.
pub fn write_results(
    curves: &[BerCurve],
    timings: &[TimingRecord],
    manifest: &RunManifest,
    dir: &Path,
) -> Result<Vec<PathBuf>, ResultsError> {
    let mut written = Vec::new();
    let curves_dir = dir.join("curves");
    fs::create_dir_all(&curves_dir).map_err(io_err(&curves_dir))?;
    for c in curves {
        let path = curves_dir.join(format!("{}.csv", sanitize(&c.decoder)));
        fs::write(&path, curve_to_csv(c)).map_err(io_err(&path))?;
        written.push(path);
    }
    if !timings.is_empty() {
        let dir_t = dir.join("timings");
        fs::create_dir_all(&dir_t).map_err(io_err(&dir_t))?;
        let path = dir_t.join("latency.csv");
        fs::write(&path, timings_to_csv(timings)).map_err(io_err(&path))?;
        written.push(path);
    }
    let dir_m = dir.join("manifests");
    fs::create_dir_all(&dir_m).map_err(io_err(&dir_m))?;
    let path = dir_m.join("manifest.json");
    let body = serde_json::to_string_pretty(manifest)?;
    fs::write(&path, body).map_err(io_err(&path))?;
    written.push(path);
    Ok(written)
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}
