//! The Bogoliubov Hamiltonian `ℍ(t)` and its dynamics on a truncated excitation
//! Fock space, plus comparisons with the full and truncated excitation dynamics.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};
use crate::excitation::frame::{mean_field, ExcitationFrame, FrameSchedule};
use crate::excitation::truncated::{check_excitation_state, evolve_on_frames, ExcitationTrajectory};
use crate::fock::{
    dgamma1, lift, pair_creation, FockState, KrylovOptions, ModeBasis, OccupationBasis, SparseOperator,
};
use crate::interaction::ScaledPotential;
use crate::manybody::ModeModel;
use crate::spectral::{SpectralPlan, TorusField};

/// Default excitation-number cutoff for Bogoliubov runs.
pub const DEFAULT_BOGOLIUBOV_CUTOFF: usize = 8;

/// Largest admissible weight of the top excitation shell.
pub const CUTOFF_LEAK_TOLERANCE: f64 = 1e-4;

/// `h`, `K₁ = q K̃₁ q` and `K₂ = (q ⊗ q) K̃₂` in mode coordinates, where
/// `K̃₁(x, y) = u(x) w_N(x-y) conj(u(y))` and `K̃₂(x, y) = u(x) w_N(x-y) u(y)`.
///
/// `K₂[a, b]` is the coefficient of `a†_a a†_b`.
#[derive(Clone, Debug)]
pub struct BogKernels {
    pub hartree: DMatrix<Complex64>,
    pub k1: DMatrix<Complex64>,
    pub k2: DMatrix<Complex64>,
}

fn project(q: &DMatrix<Complex64>, k1: DMatrix<Complex64>, k2: DMatrix<Complex64>) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    (q * k1 * q, q * k2 * q.transpose())
}

fn projector_q(u: &[Complex64]) -> DMatrix<Complex64> {
    let uv = nalgebra::DVector::from_column_slice(u);
    DMatrix::identity(u.len(), u.len()) - &uv * uv.adjoint()
}

impl BogKernels {
    /// Kernels from the mode-space interaction tensor of `model`.
    pub fn from_model(model: &ModeModel, u: &[Complex64]) -> Result<Self> {
        let k = model.modes();
        if u.len() != k {
            return Err(LabError::Dimension {
                context: "condensate coefficients",
                expected: k,
                found: u.len(),
            });
        }
        let v = model.interaction();
        let mut k1 = DMatrix::zeros(k, k);
        let mut k2 = DMatrix::zeros(k, k);
        for a in 0..k {
            for b in 0..k {
                let mut s1 = Complex64::new(0.0, 0.0);
                let mut s2 = Complex64::new(0.0, 0.0);
                for c in 0..k {
                    for d in 0..k {
                        s1 += u[c].conj() * u[d] * v.get(a, c, d, b);
                        s2 += u[c] * u[d] * v.get(a, b, c, d);
                    }
                }
                k1[(a, b)] = s1;
                k2[(a, b)] = s2;
            }
        }
        let (k1, k2) = project(&projector_q(u), k1, k2);
        Ok(Self {
            hartree: mean_field(model, u).hartree,
            k1,
            k2,
        })
    }

    /// Kernels by FFT convolution on the grid, projected onto the mode basis.
    pub fn from_grid(potential: &ScaledPotential, modes: &ModeBasis, u: &[Complex64]) -> Result<Self> {
        let grid = *potential.grid();
        potential.grid().ensure_same(modes.grid())?;
        if u.len() != modes.len() {
            return Err(LabError::Dimension {
                context: "condensate coefficients",
                expected: modes.len(),
                found: u.len(),
            });
        }
        let mut plan = SpectralPlan::new(grid);
        let w = potential.field();
        let uf = modes.synthesize(u);
        let product = |a: &TorusField, b: &TorusField, conj_b: bool| -> TorusField {
            let mut out = a.clone();
            out.values_mut().zip_mut_with(b.values(), |x, y| *x *= if conj_b { y.conj() } else { *y });
            out
        };
        let k = modes.len();
        let mut k1 = DMatrix::zeros(k, k);
        let mut k2 = DMatrix::zeros(k, k);
        let mut density = TorusField::zeros(grid);
        density.values_mut().zip_mut_with(uf.values(), |d, v| *d = Complex64::new(v.norm_sqr(), 0.0));
        let mean = plan.convolve(w, &density)?;
        for b in 0..k {
            let eb = modes.field(b);
            let c1 = plan.convolve(w, &product(&eb, &uf, true))?;
            let col1 = modes.project(&product(&c1, &uf, false))?;
            let mut ebc = eb.clone();
            ebc.values_mut().mapv_inplace(|z| z.conj());
            let c2 = plan.convolve(w, &product(&ebc, &uf, false))?;
            let col2 = modes.project(&product(&c2, &uf, false))?;
            for a in 0..k {
                k1[(a, b)] = col1[a];
                k2[(a, b)] = col2[a];
            }
        }
        let mut potential_matrix = DMatrix::zeros(k, k);
        for b in 0..k {
            let col = modes.project(&product(&modes.field(b), &mean, false))?;
            for a in 0..k {
                potential_matrix[(a, b)] = col[a];
            }
        }
        let uv = nalgebra::DVector::from_column_slice(u);
        let mu = 0.5 * (uv.adjoint() * &potential_matrix * &uv)[(0, 0)].re;
        let hartree = modes.kinetic() + potential_matrix - DMatrix::identity(k, k) * Complex64::new(mu, 0.0);
        let (k1, k2) = project(&projector_q(u), k1, k2);
        Ok(Self { hartree, k1, k2 })
    }

    pub fn modes(&self) -> usize {
        self.hartree.nrows()
    }

    /// `‖(p ⊗ 1) K₂‖_max`, `‖K₁ - K₁†‖_max` and `‖K₂ - K₂ᵀ‖_max`.
    pub fn structure_residuals(&self, u: &[Complex64]) -> (f64, f64, f64) {
        let uv = nalgebra::DVector::from_column_slice(u);
        let p = &uv * uv.adjoint();
        (
            (p * &self.k2).camax(),
            (&self.k1 - self.k1.adjoint()).camax(),
            (&self.k2 - self.k2.transpose()).camax(),
        )
    }

    /// `(q(h + K₁)q, K₂)` in the excitation coordinates of `frame`.
    pub fn in_frame(&self, frame: &ExcitationFrame) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
        let one = frame.perp_block(&(&self.hartree + &self.k1));
        let f = frame.matrix();
        let e = frame.excitation_modes();
        let k2 = (f.adjoint() * &self.k2 * f.map(|z| z.conj())).view((1, 1), (e, e)).into_owned();
        (one, k2)
    }
}

/// `ℍ = dΓ₁(h + K₁) + ½ (Σ K₂[a,b] a†_a a†_b + h.c.)` on the excitation basis of
/// `frame`.
pub fn build_h_bog(kernels: &BogKernels, frame: &ExcitationFrame, basis: &OccupationBasis) -> Result<SparseOperator> {
    if basis.modes() != frame.excitation_modes() {
        return Err(invalid("basis", "mode count differs from the frame's excitation space"));
    }
    let (one, k2) = kernels.in_frame(frame);
    let pairs = pair_creation(basis, &k2)?;
    Ok(dgamma1(basis, &one)?.add(&pairs.hermitian_part())?.with_hermitian_flag(true))
}

/// A Bogoliubov trajectory and its cutoff-leak flag.
#[derive(Clone, Debug)]
pub struct BogTrajectory {
    pub trajectory: ExcitationTrajectory,
    /// Set when the top excitation shell exceeded [`CUTOFF_LEAK_TOLERANCE`].
    pub cutoff_leak: bool,
}

/// `i∂_tΦ = ℍ(t)Φ` on `ℱ^{≤cutoff}_⊥` with the midpoint frame of each step.
pub fn evolve_bogoliubov(
    model: &ModeModel,
    schedule: &FrameSchedule,
    phi0: &FockState,
    cutoff: usize,
    options: &KrylovOptions,
    cap: usize,
) -> Result<BogTrajectory> {
    check_excitation_state(schedule, phi0)?;
    if cutoff == 0 {
        return Err(invalid("cutoff", "must be positive"));
    }
    let basis = Arc::new(OccupationBasis::truncated(phi0.basis().modes(), cutoff, cap)?);
    let start = phi0.embed_into(basis)?;
    let trajectory = evolve_on_frames(model, schedule, start, options, |frame, basis| {
        let kernels = BogKernels::from_model(model, &frame.condensate())?;
        build_h_bog(&kernels, frame, basis)
    })?;
    let cutoff_leak = trajectory.max_top_shell() >= CUTOFF_LEAK_TOLERANCE;
    if cutoff_leak {
        log::warn!(
            "Bogoliubov run leaks into the top shell (weight {:.3e} at cutoff {cutoff})",
            trajectory.max_top_shell()
        );
    }
    Ok(BogTrajectory { trajectory, cutoff_leak })
}

/// The excitation vector written in the fixed mode basis: occupations of the
/// frame's excitation modes are placed after an empty condensate slot and lifted
/// by `Γ(F)`.
pub fn embed_in_modes(phi: &FockState, frame: &ExcitationFrame, cap: usize) -> Result<FockState> {
    if phi.basis().modes() != frame.excitation_modes() {
        return Err(invalid("phi", "must live on the excitation modes of the frame"));
    }
    let target = Arc::new(OccupationBasis::truncated(frame.modes(), phi.basis().max_total(), cap)?);
    let mut amps = vec![Complex64::new(0.0, 0.0); target.dim()];
    let mut occ = vec![0u8; frame.modes()];
    for (i, a) in phi.amplitudes().iter().enumerate() {
        occ[1..].copy_from_slice(phi.basis().occupation(i));
        let j = target.index_of(&occ).expect("same cutoff");
        amps[j] = *a;
    }
    let lifted = lift(&target, frame.matrix())?.apply(&amps);
    FockState::new(target, lifted)
}

/// `⟨Φ, a†(u) a(u) Φ⟩` for `Φ` embedded through `Γ(F)` and a reference
/// condensate `u` in mode coordinates.
pub fn condensate_occupation(phi: &FockState, frame: &ExcitationFrame, u: &[Complex64], cap: usize) -> Result<f64> {
    let embedded = embed_in_modes(phi, frame, cap)?;
    let uv = nalgebra::DVector::from_column_slice(u);
    let p = &uv * uv.adjoint();
    Ok(embedded.expectation(&dgamma1(embedded.basis(), &p)?)?.re)
}

/// Pairwise distances between the full, truncated and Bogoliubov excitation
/// vectors at one time.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DynamicsComparison {
    pub time: f64,
    pub full_truncated: f64,
    pub truncated_bogoliubov: f64,
    pub full_bogoliubov: f64,
}

/// Embeds the three states into the basis with the largest cutoff and measures
/// their distances.
pub fn compare_dynamics(
    full: &FockState,
    truncated: &FockState,
    bogoliubov: &FockState,
    time: f64,
    cap: usize,
) -> Result<DynamicsComparison> {
    let modes = full.basis().modes();
    if truncated.basis().modes() != modes || bogoliubov.basis().modes() != modes {
        return Err(LabError::Incompatible("states use different excitation modes".into()));
    }
    let cutoff = [full, truncated, bogoliubov]
        .iter()
        .map(|s| s.basis().max_total())
        .max()
        .unwrap_or(0);
    let common = Arc::new(OccupationBasis::truncated(modes, cutoff, cap)?);
    let a = full.embed_into(common.clone())?;
    let b = truncated.embed_into(common.clone())?;
    let c = bogoliubov.embed_into(common)?;
    let out = DynamicsComparison {
        time,
        full_truncated: a.distance(&b)?,
        truncated_bogoliubov: b.distance(&c)?,
        full_bogoliubov: a.distance(&c)?,
    };
    let slack = 1e-12;
    let triangle = out.full_bogoliubov <= out.full_truncated + out.truncated_bogoliubov + slack
        && out.full_truncated <= out.full_bogoliubov + out.truncated_bogoliubov + slack
        && out.truncated_bogoliubov <= out.full_truncated + out.full_bogoliubov + slack;
    if !triangle {
        return Err(LabError::Incompatible(format!("triangle inequality violated: {out:?}")));
    }
    Ok(out)
}

/// Step-by-step comparison of three trajectories on the same time grid.
pub fn compare_trajectories(
    full: &ExcitationTrajectory,
    truncated: &ExcitationTrajectory,
    bogoliubov: &ExcitationTrajectory,
    cap: usize,
) -> Result<Vec<DynamicsComparison>> {
    let n = full.states.len();
    if truncated.states.len() != n || bogoliubov.states.len() != n {
        return Err(LabError::Incompatible("trajectories have different lengths".into()));
    }
    (0..n)
        .map(|k| {
            let times = [full.samples[k].time, truncated.samples[k].time, bogoliubov.samples[k].time];
            if (times[0] - times[1]).abs() > 1e-12 || (times[0] - times[2]).abs() > 1e-12 {
                return Err(LabError::Incompatible(format!("frames differ at sample {k}: {times:?}")));
            }
            compare_dynamics(&full.states[k], &truncated.states[k], &bogoliubov.states[k], times[0], cap)
        })
        .collect()
}
