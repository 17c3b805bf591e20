//! Observables and estimators over simulation traces.

use alloc::vec::Vec;

#[allow(unused_imports)]
use crate::float::FloatExt;

use crate::dynamics::SimState;

/// Default scaled-amplitude window for the exponential growth fit.
pub const DEFAULT_GROWTH_WINDOW: (f64, f64) = (1e-4, 1e-2);

/// Default amplitude floor for saturation detection.
pub const DEFAULT_SATURATION_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum DiagnosticsError {
    #[error("empty input sequence")]
    EmptyInput,
    #[error("growth window invalid: lo must satisfy 0 < lo < hi")]
    InvalidWindow,
    #[error(
        "trace never rises through the amplitude window [{lo:e}, {hi:e}]: insufficient growth"
    )]
    InsufficientGrowth { lo: f64, hi: f64 },
    #[error("no saturation peak at or above {threshold:e} found")]
    NotSaturated { threshold: f64 },
    #[error("power-law fit needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("power-law fit requires strictly positive coordinates")]
    NonPositivePoint,
}

/// Per-step diagnostics row; all quantities dimensionless.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub tau: f64,
    pub a0_scaled: f64,
    pub phi: f64,
    pub bunching_re: f64,
    pub bunching_im: f64,
    pub mean_p: f64,
    /// The conserved combination <p> + A0².
    pub conserved_c: f64,
}

impl TraceRecord {
    pub fn from_state(s: &SimState) -> Self {
        let (bunching_re, bunching_im) =
            bunching(&s.theta).expect("state invariant: at least two particles");
        Self {
            tau: s.tau,
            a0_scaled: s.a0(),
            phi: s.phi(),
            bunching_re,
            bunching_im,
            mean_p: mean(&s.p),
            conserved_c: conserved_quantity(s),
        }
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Exact fixed-point accumulation for values bounded by one in magnitude.
///
/// Each term is rounded onto a 2⁻⁶⁰ grid and summed in integer arithmetic, so
/// the result is independent of summation order (permutation invariant) while
/// staying within ~5e-19 of the true mean.
fn exact_mean_bounded<I: Iterator<Item = f64>>(values: I, count: usize) -> f64 {
    const SCALE: f64 = (1u64 << 60) as f64;
    let mut acc: i128 = 0;
    for v in values {
        acc += (v * SCALE).round() as i128;
    }
    acc as f64 / SCALE / count as f64
}

/// Complex bunching factor b = <e^{-i theta}> as `(re, im)`.
///
/// |b| = 1 means perfect phase clustering; a uniform grid gives exactly zero.
pub fn bunching(theta: &[f64]) -> Result<(f64, f64), DiagnosticsError> {
    if theta.is_empty() {
        return Err(DiagnosticsError::EmptyInput);
    }
    let n = theta.len();
    let re = exact_mean_bounded(theta.iter().map(|&t| t.cos()), n);
    let im = exact_mean_bounded(theta.iter().map(|&t| -t.sin()), n);
    Ok((re, im))
}

/// The conserved combination C = <p> + A0² of the scaled system (averaging
/// the momentum equation against the field equation cancels the drive).
pub fn conserved_quantity(s: &SimState) -> f64 {
    mean(&s.p) + s.field_re * s.field_re + s.field_im * s.field_im
}

/// Largest conservation violation rate over a trace:
/// max over records with tau > tau0 of |C(tau) - C(tau0)| / (tau - tau0).
pub fn conservation_drift_rate(trace: &[TraceRecord]) -> f64 {
    let Some(first) = trace.first() else {
        return 0.0;
    };
    let mut worst: f64 = 0.0;
    for rec in &trace[1..] {
        let dt = rec.tau - first.tau;
        if dt > 0.0 {
            worst = worst.max((rec.conserved_c - first.conserved_c).abs() / dt);
        }
    }
    worst
}

/// Exponential growth-rate fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthFit {
    /// d ln(A0) / d tau over the window.
    pub rate: f64,
    /// Scaled times of the first and last fitted record.
    pub tau_start: f64,
    pub tau_end: f64,
    pub n_points: usize,
}

/// Least-squares slope of ln A0 versus tau over the first contiguous stretch
/// where the amplitude rises from `lo` to `hi`.
///
/// The linear-stage reference value for a resonant cold beam is
/// √3/2 ≈ 0.8660, the real part of the unstable root of λ³ = i. Note the
/// window must sit above the effective seed level (shot noise or initial
/// field) for the fit to see clean exponential growth.
pub fn fit_growth_rate(
    trace: &[TraceRecord],
    lo: f64,
    hi: f64,
) -> Result<GrowthFit, DiagnosticsError> {
    if !(lo > 0.0 && hi > lo) {
        return Err(DiagnosticsError::InvalidWindow);
    }
    let not_found = DiagnosticsError::InsufficientGrowth { lo, hi };
    let start = trace
        .iter()
        .position(|r| r.a0_scaled >= lo)
        .ok_or(not_found)?;
    let end = trace[start..]
        .iter()
        .position(|r| r.a0_scaled >= hi)
        .map(|off| start + off)
        .ok_or(not_found)?;
    let points: Vec<(f64, f64)> = trace[start..=end]
        .iter()
        .filter(|r| r.a0_scaled > 0.0)
        .map(|r| (r.tau, r.a0_scaled.ln()))
        .collect();
    if points.len() < 3 {
        return Err(not_found);
    }
    let (slope, _, _) = linear_least_squares(&points);
    Ok(GrowthFit {
        rate: slope,
        tau_start: points[0].0,
        tau_end: points[points.len() - 1].0,
        n_points: points.len(),
    })
}

/// First scaled time at which the amplitude reaches `level`, if any.
pub fn first_amplitude_crossing(trace: &[TraceRecord], level: f64) -> Option<f64> {
    trace.iter().find(|r| r.a0_scaled >= level).map(|r| r.tau)
}

/// A detected saturation peak.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Saturation {
    pub tau_sat: f64,
    pub a_peak: f64,
}

/// First interior local maximum of the amplitude at or above `threshold`.
pub fn detect_saturation(
    trace: &[TraceRecord],
    threshold: f64,
) -> Result<Saturation, DiagnosticsError> {
    for k in 1..trace.len().saturating_sub(1) {
        let a = trace[k].a0_scaled;
        if a >= threshold && a >= trace[k - 1].a0_scaled && a > trace[k + 1].a0_scaled {
            return Ok(Saturation {
                tau_sat: trace[k].tau,
                a_peak: a,
            });
        }
    }
    Err(DiagnosticsError::NotSaturated { threshold })
}

/// Power law y = prefactor · x^exponent fitted by least squares in log-log
/// space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub prefactor: f64,
    /// Coefficient of determination of the log-log regression, in [0, 1].
    pub r_squared: f64,
}

/// Fit a power law through at least three strictly positive points.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit, DiagnosticsError> {
    if points.len() < 3 {
        return Err(DiagnosticsError::TooFewPoints {
            needed: 3,
            got: points.len(),
        });
    }
    if points
        .iter()
        .any(|&(x, y)| !(x > 0.0) || !(y > 0.0) || !x.is_finite() || !y.is_finite())
    {
        return Err(DiagnosticsError::NonPositivePoint);
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let (slope, intercept, r_squared) = linear_least_squares(&logs);
    Ok(PowerLawFit {
        exponent: slope,
        prefactor: intercept.exp(),
        r_squared,
    })
}

/// Ordinary least squares on (x, y) pairs: returns (slope, intercept, r²).
fn linear_least_squares(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for &(x, y) in points {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res = syy - slope * sxy;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    (slope, intercept, r_squared)
}
