//! Log-log least-squares fits for convergence rates.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{invalid, LabError, Result};

/// Errors at or below this level are indistinguishable from round-off.
pub const DEGENERATE_ERROR: f64 = 1e-13;

/// Ordinary least-squares fit of `log error = intercept + slope · log N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub log_n: Vec<f64>,
    pub log_error: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square of the fit residuals in log space.
    pub residual: f64,
    /// Half-width of the 95% confidence interval for the slope.
    pub half_width: f64,
}

impl RateFit {
    /// Whether `target` lies within `tolerance` of the fitted slope.
    pub fn slope_within(&self, target: f64, tolerance: f64) -> bool {
        (self.slope - target).abs() <= tolerance
    }
}

/// Fits a power law to `(N, error)` pairs.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(invalid("points", "a slope needs at least three points"));
    }
    if let Some(&(n, e)) = points.iter().find(|(_, e)| !(*e > DEGENERATE_ERROR)) {
        return Err(LabError::DegenerateFit(format!("error {e:e} at N = {n} is at round-off level")));
    }
    if points.iter().any(|(n, _)| !(*n > 0.0)) {
        return Err(invalid("points", "abscissae must be positive"));
    }
    let log_n: Vec<f64> = points.iter().map(|(n, _)| n.ln()).collect();
    let log_error: Vec<f64> = points.iter().map(|(_, e)| e.ln()).collect();
    let m = points.len() as f64;
    let mx = log_n.iter().sum::<f64>() / m;
    let my = log_error.iter().sum::<f64>() / m;
    let sxx: f64 = log_n.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(LabError::DegenerateFit("all abscissae coincide".into()));
    }
    let sxy: f64 = log_n.iter().zip(&log_error).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = log_n
        .iter()
        .zip(&log_error)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let dof = m - 2.0;
    let se = (ssr / dof / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof)
        .map_err(|e| LabError::DegenerateFit(e.to_string()))?
        .inverse_cdf(0.975);
    Ok(RateFit {
        log_n,
        log_error,
        slope,
        intercept,
        residual: (ssr / m).sqrt(),
        half_width: t * se,
    })
}
