//! Convergence reports and log-log slope fitting.

use serde::Serialize;

/// Errors at or below this value are treated as numerically zero and are
/// excluded from slope fits.
pub const SLOPE_FIT_FLOOR: f64 = 1e-12;

/// Per-`t` errors of a limit computation with a fitted log-log rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub t: Vec<f64>,
    pub errors: Vec<f64>,
    pub estimates: Vec<f64>,
    /// Least-squares slope of `ln e` against `ln t`; `None` with fewer than 3
    /// errors above [`SLOPE_FIT_FLOOR`].
    pub slope: Option<f64>,
    pub limit_estimate: f64,
    pub pass: bool,
}

impl ConvergenceReport {
    pub fn new(t: Vec<f64>, errors: Vec<f64>, estimates: Vec<f64>) -> Self {
        let slope = fit_log_log_slope(&t, &errors);
        let limit_estimate = estimates.last().copied().unwrap_or(f64::NAN);
        Self {
            t,
            errors,
            estimates,
            slope,
            limit_estimate,
            pass: false,
        }
    }

    /// Sets `pass` for an O(t^slope) limit: either every error is below
    /// `zero_tol`, or the errors strictly decrease and the slope lies in `band`.
    pub fn judge_rate(mut self, band: (f64, f64), zero_tol: f64) -> Self {
        self.pass = if self.errors.iter().all(|&e| e <= zero_tol) {
            true
        } else {
            self.strictly_decreasing()
                && self
                    .slope
                    .is_some_and(|s| s >= band.0 && s <= band.1)
        };
        self
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.errors.windows(2).all(|w| w[1] < w[0])
    }

    pub fn max_error(&self) -> f64 {
        self.errors.iter().copied().fold(0.0, f64::max)
    }
}

/// Least-squares slope of `(ln t, ln e)` over points with `e > SLOPE_FIT_FLOOR`.
pub fn fit_log_log_slope(t: &[f64], e: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(e)
        .filter(|(&ti, &ei)| ei > SLOPE_FIT_FLOOR && ti > 0.0)
        .map(|(&ti, &ei)| (ti.ln(), ei.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}
