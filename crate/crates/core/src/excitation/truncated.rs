//! Excitation dynamics `i∂_tΦ = 1^{≤M} G_N(t) 1^{≤M} Φ` on transported frames.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::frame::{ExcitationFrame, FrameSchedule};
use super::generator::{build_generator, FrameKernels};
use super::map::ExcitationMap;
use crate::error::{invalid, Result};
use crate::fock::{dgamma1, krylov_propagate, FockState, KrylovOptions, OccupationBasis, SparseOperator};
use crate::manybody::{ModeModel, Trajectory};

/// `M = ⌊N^{1-δ}⌋`, at least one.
pub fn cutoff_rule(particles: usize, delta: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&delta) {
        return Err(invalid("delta", "must lie in [0, 1)"));
    }
    Ok(((particles as f64).powf(1.0 - delta).floor() as usize).max(1))
}

/// Per-sample diagnostics of an excitation trajectory.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExcitationSample {
    pub time: f64,
    pub norm: f64,
    /// `⟨Φ, 𝒩 Φ⟩`.
    pub number: f64,
    /// `⟨Φ, dΓ₁(1-Δ) Φ⟩` with `1-Δ` compressed to `𝔥_⊥(t)`.
    pub kinetic: f64,
    /// Weight of the top excitation-number shell.
    pub top_shell: f64,
}

/// States on `ℱ^{≤m}_⊥` in frame coordinates, one per time step.
#[derive(Clone, Debug)]
pub struct ExcitationTrajectory {
    pub states: Vec<FockState>,
    pub samples: Vec<ExcitationSample>,
}

impl ExcitationTrajectory {
    pub fn last(&self) -> &FockState {
        self.states.last().expect("trajectories contain the initial state")
    }

    pub fn max_norm_drift(&self) -> f64 {
        let n0 = self.samples[0].norm;
        self.samples.iter().map(|s| (s.norm - n0).abs()).fold(0.0, f64::max)
    }

    pub fn max_top_shell(&self) -> f64 {
        self.samples.iter().map(|s| s.top_shell).fold(0.0, f64::max)
    }
}

pub(crate) fn sample(
    model: &ModeModel,
    frame: &ExcitationFrame,
    state: &FockState,
    time: f64,
) -> Result<ExcitationSample> {
    let basis = state.basis();
    let kinetic = state
        .expectation(&dgamma1(basis, &frame.perp_block(&model.one_minus_laplacian()))?)?
        .re;
    Ok(ExcitationSample {
        time,
        norm: state.norm(),
        number: state.number_expectation(),
        kinetic,
        top_shell: state.shell_weight(basis.max_total()),
    })
}

/// Propagates on a fixed excitation basis with a generator rebuilt from the
/// midpoint frame of every step.
pub(crate) fn evolve_on_frames(
    model: &ModeModel,
    schedule: &FrameSchedule,
    phi0: FockState,
    options: &KrylovOptions,
    mut generator: impl FnMut(&ExcitationFrame, &OccupationBasis) -> Result<SparseOperator>,
) -> Result<ExcitationTrajectory> {
    let dt = schedule.dt();
    let mut state = phi0;
    let mut samples = vec![sample(model, schedule.at_step(0), &state, 0.0)?];
    let mut states = vec![state.clone()];
    for k in 0..schedule.steps() {
        let g = generator(schedule.midpoint(k), state.basis())?;
        state = krylov_propagate(&g, &state, dt, options)?.state;
        let t = (k + 1) as f64 * dt;
        samples.push(sample(model, schedule.at_step(k + 1), &state, t)?);
        states.push(state.clone());
    }
    Ok(ExcitationTrajectory { states, samples })
}

pub(crate) fn check_excitation_state(schedule: &FrameSchedule, phi0: &FockState) -> Result<()> {
    if phi0.basis().modes() != schedule.at_step(0).excitation_modes() {
        return Err(invalid("phi0", "must live on the excitation modes of the frame"));
    }
    Ok(())
}

/// `Φ_{N,M}(t)`: the truncated excitation dynamics. `cutoff ≥ N` gives the full
/// excitation dynamics `Φ_N(t) = U_N(t) Ψ_N(t)`.
pub fn truncated_evolution(
    model: &ModeModel,
    schedule: &FrameSchedule,
    particles: usize,
    cutoff: usize,
    phi0: &FockState,
    options: &KrylovOptions,
    cap: usize,
) -> Result<ExcitationTrajectory> {
    check_excitation_state(schedule, phi0)?;
    let m = cutoff.min(particles);
    if m == 0 {
        return Err(invalid("M", "must be positive"));
    }
    let basis = Arc::new(OccupationBasis::truncated(phi0.basis().modes(), m, cap)?);
    let start = phi0.embed_into(basis)?;
    evolve_on_frames(model, schedule, start, options, |frame, basis| {
        let kernels = FrameKernels::new(model, frame)?;
        Ok(build_generator(&kernels, particles, basis)?.total)
    })
}

/// `Φ_N(t_k) = U_N(t_k) Ψ_N(t_k)` for a many-body trajectory sampled on the
/// steps of `schedule`.
pub fn mapped_trajectory(
    model: &ModeModel,
    schedule: &FrameSchedule,
    trajectory: &Trajectory,
    cap: usize,
) -> Result<ExcitationTrajectory> {
    if trajectory.states.len() != schedule.steps() + 1 {
        return Err(invalid("trajectory", "must be sampled on the steps of the frame schedule"));
    }
    let mut states = Vec::with_capacity(trajectory.states.len());
    let mut samples = Vec::with_capacity(trajectory.states.len());
    for (k, (psi, &t)) in trajectory.states.iter().zip(&trajectory.times).enumerate() {
        let frame = schedule.at_step(k);
        let map = ExcitationMap::new(frame, psi.basis().clone(), cap)?;
        let phi = map.apply(psi)?;
        samples.push(sample(model, frame, &phi, t)?);
        states.push(phi);
    }
    Ok(ExcitationTrajectory { states, samples })
}
