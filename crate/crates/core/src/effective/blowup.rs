//! Detection of `H¹` growth in focusing runs, guarded by a spectral-resolution check.

use serde::{Deserialize, Serialize};

use super::MeanFieldState;
use crate::error::{invalid, Result};
use crate::spectral::SpectralPlan;

/// Controls for [`evolve_with_blowup_guard`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupConfig {
    /// Final time `T`.
    pub t_final: f64,
    /// Step used while `‖φ‖_∞` stays at its initial size.
    pub dt_max: f64,
    /// Detection fires once `‖φ‖_{H¹}` exceeds this multiple of its initial value.
    pub h1_factor: f64,
    /// The guard trips once the spectral tail carries more than this fraction of `Σ|φ̂|²`.
    pub tail_limit: f64,
    /// Frequencies beyond this fraction of the Nyquist frequency count as tail.
    pub tail_cutoff: f64,
    /// Smallest admissible step; reaching it trips the guard.
    pub dt_min: f64,
}

impl Default for BlowupConfig {
    fn default() -> Self {
        Self {
            t_final: 1.0,
            dt_max: 1e-3,
            h1_factor: 1e3,
            tail_limit: 1e-6,
            tail_cutoff: 2.0 / 3.0,
            dt_min: 1e-9,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupSample {
    pub t: f64,
    /// `‖φ(t)‖_{H¹}`.
    pub h1: f64,
    pub sup: f64,
    pub tail: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub detected: bool,
    pub t_detect: Option<f64>,
    pub resolution_guard_tripped: bool,
    pub t_guard: Option<f64>,
    pub t_end: f64,
    pub threshold: f64,
    pub h1_history: Vec<BlowupSample>,
}

impl BlowupReport {
    /// Largest recorded `‖φ‖_{H¹}` relative to its initial value.
    pub fn max_growth(&self) -> f64 {
        let first = self.h1_history.first().map_or(1.0, |s| s.h1);
        self.h1_history.iter().fold(0.0, |m, s| m.max(s.h1 / first))
    }
}

/// Advances `state` until `T`, until `‖φ‖_{H¹}` passes the threshold, or until the
/// resolution guard trips. The step shrinks like `1/‖φ‖²_∞`.
pub fn evolve_with_blowup_guard<S: MeanFieldState>(
    state: &mut S,
    plan: &mut SpectralPlan,
    config: &BlowupConfig,
) -> Result<BlowupReport> {
    if !(config.t_final > 0.0) {
        return Err(invalid("T", "must be positive"));
    }
    if !(config.dt_max > 0.0) {
        return Err(invalid("dt", "must be positive"));
    }
    let sample = |state: &S, plan: &mut SpectralPlan| -> Result<BlowupSample> {
        let phi = state.wavefunction();
        let (norms, tail) = plan.diagnostics(phi, config.tail_cutoff)?;
        Ok(BlowupSample {
            t: state.time(),
            h1: norms.h1.sqrt(),
            sup: phi.sup_norm(),
            tail,
        })
    };
    let first = sample(state, plan)?;
    let threshold = config.h1_factor * first.h1;
    let sup0 = first.sup.max(f64::MIN_POSITIVE);
    let t_end = state.time() + config.t_final;
    let mut history = vec![first];
    let mut report = BlowupReport {
        detected: false,
        t_detect: None,
        resolution_guard_tripped: false,
        t_guard: None,
        t_end,
        threshold,
        h1_history: Vec::new(),
    };
    if first.tail > config.tail_limit {
        report.resolution_guard_tripped = true;
        report.t_guard = Some(first.t);
    }
    let mut last = first;
    while !report.resolution_guard_tripped && state.time() < t_end - 1e-14 {
        let ratio = (sup0 / last.sup.max(f64::MIN_POSITIVE)).powi(2);
        let mut dt = config.dt_max * ratio.min(1.0);
        if dt < config.dt_min {
            report.resolution_guard_tripped = true;
            report.t_guard = Some(state.time());
            break;
        }
        dt = dt.min(t_end - state.time());
        state.step(plan, dt)?;
        last = sample(state, plan)?;
        history.push(last);
        if last.tail > config.tail_limit {
            report.resolution_guard_tripped = true;
            report.t_guard = Some(last.t);
        } else if last.h1 > threshold {
            report.detected = true;
            report.t_detect = Some(last.t);
            break;
        }
    }
    report.h1_history = history;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effective::{Gauge, NlsState};
    use crate::spectral::{TorusField, TorusGrid};

    #[test]
    fn free_evolution_has_no_detection() {
        let g = TorusGrid::new(16.0, 64).unwrap();
        let mut plan = SpectralPlan::new(g);
        let phi0 = TorusField::gaussian(g, 1.0, (0.0, 0.0)).normalized();
        let mut s = NlsState::new(phi0.clone(), 0.0, Gauge::Plain);
        let cfg = BlowupConfig {
            dt_max: 0.01,
            ..BlowupConfig::default()
        };
        let report = evolve_with_blowup_guard(&mut s, &mut plan, &cfg).unwrap();
        assert!(!report.detected && !report.resolution_guard_tripped);
        assert!((s.t - 1.0).abs() < 1e-12);
        let mut free = phi0;
        plan.free_evolve(&mut free, 1.0).unwrap();
        assert!(s.phi.difference(&free).unwrap().sup_norm() < 1e-12);
    }

    #[test]
    fn rejects_nonpositive_horizon() {
        let g = TorusGrid::new(16.0, 16).unwrap();
        let mut plan = SpectralPlan::new(g);
        let mut s = NlsState::new(TorusField::zeros(g), 0.0, Gauge::Plain);
        let cfg = BlowupConfig {
            t_final: 0.0,
            ..BlowupConfig::default()
        };
        assert!(evolve_with_blowup_guard(&mut s, &mut plan, &cfg).is_err());
    }
}
