//! Convergence of the Hartree solution `u_N` to the NLS solution `φ`.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evolve_to, Gauge, HartreeState, MeanFieldState, NlsState};
use crate::error::{invalid, LabError, Result};
use crate::fit::{fit_rate, RateFit};
use crate::interaction::{PotentialProfile, ScaledPotential};
use crate::spectral::{SpectralPlan, TorusField, TorusGrid};

/// Tail fraction above which a run counts as unresolved.
const RESOLUTION_TAIL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateStudyConfig {
    pub profile: PotentialProfile,
    pub beta: f64,
    pub particles: Vec<usize>,
    pub t_eval: f64,
    pub dt: f64,
    pub length: f64,
    pub points: usize,
    /// Width of the centered Gaussian initial datum.
    pub initial_width: f64,
}

impl RateStudyConfig {
    pub fn grid(&self) -> Result<TorusGrid> {
        TorusGrid::new(self.length, self.points)
    }

    pub fn initial_datum(&self) -> Result<TorusField> {
        Ok(TorusField::gaussian(self.grid()?, self.initial_width, (0.0, 0.0)).normalized())
    }
}

/// One row of the rate table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub particles: usize,
    pub beta: f64,
    pub t: f64,
    /// `‖u_N(t) - φ(t)‖_{L²}`.
    pub l2_error: f64,
    /// `‖u_N(t)‖_{H¹}`.
    pub h1_norm: f64,
    pub resolved: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateStudy {
    pub rows: Vec<RateRow>,
    /// Present when at least three resolved, non-degenerate errors were measured.
    pub fit: Option<RateFit>,
    /// Set when all errors sit at round-off level.
    pub degenerate: bool,
    /// `‖φ(t)‖_{H¹}` of the NLS reference.
    pub nls_h1: f64,
    /// Largest boundary-to-peak ratio over all runs.
    pub boundary_ratio: f64,
}

/// Runs the NLS once and the Hartree equation for every `N` on the same grid
/// and step, and fits `log ‖u_N - φ‖` against `log N`.
pub fn hartree_vs_nls_rate(config: &RateStudyConfig) -> Result<RateStudy> {
    if config.particles.is_empty() {
        return Err(invalid("N_list", "no particle numbers given"));
    }
    if !(config.t_eval > 0.0 && config.dt > 0.0) {
        return Err(invalid("t_eval", "times must be positive"));
    }
    let grid = config.grid()?;
    let phi0 = config.initial_datum()?;
    let b = config.profile.coupling();

    let mut plan = SpectralPlan::new(grid);
    let mut nls = NlsState::new(phi0.clone(), b, Gauge::WithChemicalPotential);
    evolve_to(&mut nls, &mut plan, config.t_eval, config.dt)?;
    let (nls_norms, nls_tail) = plan.diagnostics(&nls.phi, 2.0 / 3.0)?;
    if nls_tail > RESOLUTION_TAIL {
        return Err(LabError::Propagation(format!(
            "NLS reference unresolved at t = {} (tail {nls_tail:e})",
            config.t_eval
        )));
    }
    let reference = nls.phi;

    let runs: Vec<Result<(RateRow, f64)>> = config
        .particles
        .par_iter()
        .map(|&n| {
            let mut plan = SpectralPlan::new(grid);
            let w = ScaledPotential::new(config.profile, n, config.beta, grid)?;
            let mut h = HartreeState::new(phi0.clone(), &w, &mut plan, Gauge::WithChemicalPotential)?;
            evolve_to(&mut h, &mut plan, config.t_eval, config.dt)?;
            let (norms, tail) = plan.diagnostics(h.wavefunction(), 2.0 / 3.0)?;
            let l2_error = h.u.difference(&reference)?.mass().sqrt();
            Ok((
                RateRow {
                    particles: n,
                    beta: config.beta,
                    t: h.t,
                    l2_error,
                    h1_norm: norms.h1.sqrt(),
                    resolved: tail <= RESOLUTION_TAIL,
                },
                h.u.boundary_ratio(),
            ))
        })
        .collect();

    let mut rows = Vec::with_capacity(runs.len());
    let mut boundary_ratio = reference.boundary_ratio();
    for run in runs {
        let (row, edge) = run?;
        if !row.resolved {
            warn!("excluding unresolved Hartree run N = {}", row.particles);
        }
        boundary_ratio = boundary_ratio.max(edge);
        rows.push(row);
    }
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.resolved)
        .map(|r| (r.particles as f64, r.l2_error))
        .collect();
    let (fit, degenerate) = match fit_rate(&points) {
        Ok(fit) => (Some(fit), false),
        Err(LabError::DegenerateFit(reason)) => {
            warn!("degenerate rate fit: {reason}");
            (None, true)
        }
        Err(LabError::InvalidParameter { .. }) => (None, false),
        Err(e) => return Err(e),
    };
    Ok(RateStudy {
        rows,
        fit,
        degenerate,
        nls_h1: nls_norms.h1.sqrt(),
        boundary_ratio,
    })
}
