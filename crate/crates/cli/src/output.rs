//! File outputs: run traces, structured summaries, manifests and sweep
//! tables.
//!
//! Floats are written with 17 significant digits so every `f64` survives a
//! text round trip bit-exactly; formatting never depends on locale.

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;

use hydrofel_core::diagnostics::TraceRecord;
use hydrofel_core::sweep::{SweepResult, SweepRow};

use crate::config::FileConfig;

/// Column header of `trace.csv`; fixed byte-for-byte.
pub const TRACE_HEADER: &str = "tau,A0,phi,b_re,b_im,mean_p,conserved_C";

/// Column header of `sweep.csv`; fixed byte-for-byte.
pub const SWEEP_HEADER: &str = "axis_value,observable,tau_sat,A_peak,growth_rate";

/// 17 significant digits: lossless f64 round trip.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_trace_csv(path: &Path, trace: &[TraceRecord]) -> Result<()> {
    let mut out = String::with_capacity(trace.len() * 160 + TRACE_HEADER.len() + 1);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in trace {
        for (i, v) in [
            r.tau,
            r.a0_scaled,
            r.phi,
            r.bunching_re,
            r.bunching_im,
            r.mean_p,
            r.conserved_c,
        ]
        .iter()
        .enumerate()
        {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&format_float(*v));
        }
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))
}

/// Parse a trace written by [`write_trace_csv`].
pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRecord>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().context("empty trace file")?;
    anyhow::ensure!(header == TRACE_HEADER, "unexpected trace header {header:?}");
    let mut trace = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let mut fields = line.split(',').map(str::parse::<f64>);
        let mut next = || -> Result<f64> {
            fields
                .next()
                .with_context(|| format!("short row at line {}", lineno + 2))?
                .with_context(|| format!("bad float at line {}", lineno + 2))
        };
        trace.push(TraceRecord {
            tau: next()?,
            a0_scaled: next()?,
            phi: next()?,
            bunching_re: next()?,
            bunching_im: next()?,
            mean_p: next()?,
            conserved_c: next()?,
        });
    }
    Ok(trace)
}

/// Structured summary of one simulate run.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub status: String,
    pub n_records: usize,
    pub growth_rate: Option<f64>,
    pub growth_window: (f64, f64),
    pub growth_fit_points: Option<usize>,
    pub tau_sat: Option<f64>,
    pub a_peak_scaled: Option<f64>,
    pub tau_first_unity: Option<f64>,
    pub conservation_drift_rate: f64,
    pub final_tau: f64,
    pub final_a0_scaled: f64,
    pub final_phi: f64,
}

/// Reproducibility record for a run: the full configuration echo plus version
/// and timing. Re-running the same build with the echoed config and seed
/// yields a byte-identical trace.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub status: String,
    pub config: FileConfig,
}

pub fn unix_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn sweep_row_fields(row: &SweepRow) -> [f64; 5] {
    match &row.outcome {
        Ok(d) => [
            row.axis_value,
            d.observable,
            d.tau_sat,
            d.a_peak_scaled,
            d.growth_rate.unwrap_or(f64::NAN),
        ],
        Err(_) => [row.axis_value, f64::NAN, f64::NAN, f64::NAN, f64::NAN],
    }
}

pub fn write_sweep_csv(path: &Path, result: &SweepResult) -> Result<()> {
    let mut out = String::new();
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for row in &result.rows {
        let fields = sweep_row_fields(row);
        let mut first = true;
        for v in fields {
            if !first {
                out.push(',');
            }
            out.push_str(&format_float(v));
            first = false;
        }
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))
}

/// Column header of `phase_hist.csv`; fixed byte-for-byte.
pub const PHASE_HIST_HEADER: &str = "theta_center,p_center,count";

/// Gnuplot-ready 2D histogram of the particle phase space (theta wrapped into
/// [0, 2 pi), momentum binned over its observed range).
pub fn write_phase_histogram(
    path: &Path,
    state: &hydrofel_core::SimState,
    theta_bins: usize,
    p_bins: usize,
) -> Result<()> {
    use std::f64::consts::TAU;
    anyhow::ensure!(theta_bins > 0 && p_bins > 0, "histogram needs bins");
    let (mut p_min, mut p_max) = state
        .p
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| {
            (lo.min(p), hi.max(p))
        });
    if !(p_max > p_min) {
        // degenerate (e.g. cold beam): a unit band centred on the value
        p_min -= 0.5;
        p_max += 0.5;
    }
    let p_width = (p_max - p_min) / p_bins as f64;
    let theta_width = TAU / theta_bins as f64;
    let mut counts = vec![0u64; theta_bins * p_bins];
    for (&theta, &p) in state.theta.iter().zip(&state.p) {
        let wrapped = theta.rem_euclid(TAU);
        let ti = ((wrapped / theta_width) as usize).min(theta_bins - 1);
        let pi = (((p - p_min) / p_width) as usize).min(p_bins - 1);
        counts[ti * p_bins + pi] += 1;
    }
    let mut out = String::with_capacity(counts.len() * 48);
    out.push_str(PHASE_HIST_HEADER);
    out.push('\n');
    for ti in 0..theta_bins {
        for pi in 0..p_bins {
            let theta_c = (ti as f64 + 0.5) * theta_width;
            let p_c = p_min + (pi as f64 + 0.5) * p_width;
            out.push_str(&format_float(theta_c));
            out.push(',');
            out.push_str(&format_float(p_c));
            out.push(',');
            out.push_str(&counts[ti * p_bins + pi].to_string());
            out.push('\n');
        }
    }
    fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRowStatus {
    pub axis_value: f64,
    pub status: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepFitReport {
    pub exponent: Option<f64>,
    pub prefactor: Option<f64>,
    pub r_squared: Option<f64>,
    pub rows: Vec<SweepRowStatus>,
}

impl SweepFitReport {
    pub fn from_result(result: &SweepResult) -> Self {
        Self {
            exponent: result.fit.map(|f| f.exponent),
            prefactor: result.fit.map(|f| f.prefactor),
            r_squared: result.fit.map(|f| f.r_squared),
            rows: result
                .rows
                .iter()
                .map(|r| SweepRowStatus {
                    axis_value: r.axis_value,
                    status: match &r.outcome {
                        Ok(_) => "ok".to_string(),
                        Err(e) => format!("failed: {e}"),
                    },
                })
                .collect(),
        }
    }
}

/// Render aligned key-value lines.
pub fn render_kv_table(pairs: &[(&str, String)]) -> String {
    use std::fmt::Write;
    let width = pairs.iter().map(|(k, _)| k.len()).max().unwrap_or(0) + 2;
    let mut out = String::new();
    for (k, v) in pairs {
        let _ = writeln!(out, "{k:<width$}{v}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_round_trips_bit_exactly() {
        let trace: Vec<TraceRecord> = (0..40)
            .map(|k| TraceRecord {
                tau: k as f64 * 0.01,
                a0_scaled: 1e-6 * ((k as f64) * 0.77).exp(),
                phi: -0.3 + k as f64,
                bunching_re: (k as f64).sin() / 3.0,
                bunching_im: (k as f64).cos() / 7.0,
                mean_p: -1.0 / (k as f64 + 1.0),
                conserved_c: 1e-12 + k as f64 * 1e-15,
            })
            .collect();
        let dir = std::env::temp_dir().join("hydrofel-output-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("trace.csv");
        write_trace_csv(&path, &trace).unwrap();
        let back = read_trace_csv(&path).unwrap();
        assert_eq!(trace, back);
        // fixed header bytes
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("tau,A0,phi,b_re,b_im,mean_p,conserved_C\n"));
    }

    #[test]
    fn phase_histogram_counts_every_particle() {
        let state = hydrofel_core::SimState {
            tau: 0.0,
            theta: vec![0.1, 3.0, 6.2, -0.1, 7.0],
            p: vec![0.0, 0.5, -0.5, 0.25, 0.0],
            field_re: 0.0,
            field_im: 0.0,
        };
        let dir = std::env::temp_dir().join("hydrofel-output-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("phase_hist.csv");
        write_phase_histogram(&path, &state, 8, 4).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("theta_center,p_center,count\n"));
        let mut total = 0u64;
        for line in text.lines().skip(1) {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields.len(), 3);
            let theta: f64 = fields[0].parse().unwrap();
            assert!((0.0..core::f64::consts::TAU).contains(&theta));
            total += fields[2].parse::<u64>().unwrap();
        }
        assert_eq!(total, 5);
        assert_eq!(text.lines().count(), 1 + 8 * 4);
    }

    #[test]
    fn float_format_is_lossless() {
        for v in [
            0.0,
            -0.0,
            1.0,
            core::f64::consts::PI,
            6.409e-30,
            2.995e8,
            -1.234567890123456e-300,
            f64::MAX,
            f64::MIN_POSITIVE,
        ] {
            let s = format_float(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(v.to_bits(), back.to_bits(), "{v} -> {s}");
        }
    }

    #[test]
    fn kv_table_aligns() {
        let s = render_kv_table(&[("a", "1".into()), ("long_key", "2".into())]);
        assert_eq!(s, "a         1\nlong_key  2\n");
    }
}
