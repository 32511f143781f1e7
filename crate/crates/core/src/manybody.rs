//! Exact `N`-body dynamics in a plane-wave Galerkin space, one-body density
//! matrices and condensation diagnostics.

use std::io::Write;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};
use crate::fock::dense::{hermitian_eigen, trace_norm};
use crate::fock::{
    dgamma1, dgamma2, krylov_propagate, lanczos_min_eigenvalue, BasisKind, FockState, KrylovOptions, ModeBasis,
    OccupationBasis, SparseOperator, TwoBodyKernel,
};
use crate::interaction::ScaledPotential;
use crate::spectral::SpectralPlan;

/// One-body kinetic matrix and two-body interaction tensor in a finite mode basis.
#[derive(Clone, Debug)]
pub struct ModeModel {
    kinetic: DMatrix<Complex64>,
    interaction: TwoBodyKernel,
}

impl ModeModel {
    pub fn new(kinetic: DMatrix<Complex64>, interaction: TwoBodyKernel) -> Result<Self> {
        let k = kinetic.nrows();
        if kinetic.ncols() != k || interaction.modes() != k {
            return Err(LabError::Dimension {
                context: "mode model",
                expected: k,
                found: interaction.modes(),
            });
        }
        Ok(Self { kinetic, interaction })
    }

    /// `-Δ` and `w_N(x - y)` in the first `K` plane waves of the potential's grid.
    pub fn plane_waves(potential: &ScaledPotential, modes: usize) -> Result<Self> {
        let basis = ModeBasis::plane_waves(*potential.grid(), modes)?;
        let mut plan = SpectralPlan::new(*potential.grid());
        let interaction = basis.interaction_tensor(&mut plan, potential.field())?;
        Self::new(basis.kinetic(), interaction)
    }

    pub fn modes(&self) -> usize {
        self.kinetic.nrows()
    }

    pub fn kinetic(&self) -> &DMatrix<Complex64> {
        &self.kinetic
    }

    /// `1 - Δ` in the mode basis.
    pub fn one_minus_laplacian(&self) -> DMatrix<Complex64> {
        &self.kinetic + DMatrix::identity(self.modes(), self.modes())
    }

    pub fn interaction(&self) -> &TwoBodyKernel {
        &self.interaction
    }
}

/// `H_N = dΓ₁(-Δ) + dΓ₂(w_N)/(N-1)` on an `N`-particle sector.
pub fn build_hamiltonian(model: &ModeModel, basis: &OccupationBasis) -> Result<SparseOperator> {
    let particles = match basis.kind() {
        BasisKind::Sector { particles } => particles,
        BasisKind::Truncated { .. } => return Err(invalid("basis", "H_N acts on an N-particle sector")),
    };
    if particles < 2 {
        return Err(invalid("N", "the interaction prefactor 1/(N-1) needs N ≥ 2"));
    }
    let kinetic = dgamma1(basis, model.kinetic())?;
    let interaction = dgamma2(basis, model.interaction())?.scaled(Complex64::new(1.0 / (particles as f64 - 1.0), 0.0));
    Ok(kinetic.add(&interaction)?.with_hermitian_flag(true))
}

/// An `N`-body problem: sector basis, mode model and assembled `H_N`.
#[derive(Clone, Debug)]
pub struct ManyBodySystem {
    particles: usize,
    basis: Arc<OccupationBasis>,
    model: ModeModel,
    hamiltonian: SparseOperator,
}

impl ManyBodySystem {
    pub fn new(model: ModeModel, particles: usize, cap: usize) -> Result<Self> {
        if particles < 2 {
            return Err(invalid("N", "the interaction prefactor 1/(N-1) needs N ≥ 2"));
        }
        let basis = Arc::new(OccupationBasis::sector(model.modes(), particles, cap)?);
        let hamiltonian = build_hamiltonian(&model, &basis)?;
        Ok(Self {
            particles,
            basis,
            model,
            hamiltonian,
        })
    }

    /// Plane-wave system for a scaled potential; `N` is taken from the potential.
    pub fn plane_waves(potential: &ScaledPotential, modes: usize, cap: usize) -> Result<Self> {
        Self::new(ModeModel::plane_waves(potential, modes)?, potential.particles(), cap)
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn basis(&self) -> &Arc<OccupationBasis> {
        &self.basis
    }

    pub fn model(&self) -> &ModeModel {
        &self.model
    }

    pub fn hamiltonian(&self) -> &SparseOperator {
        &self.hamiltonian
    }

    /// `φ^{⊗N}` for normalized mode coefficients `φ`.
    pub fn product_state(&self, phi: &[Complex64]) -> Result<FockState> {
        FockState::product(self.basis.clone(), phi)
    }

    pub fn energy(&self, psi: &FockState) -> Result<f64> {
        Ok(psi.expectation(&self.hamiltonian)?.re)
    }

    /// `e^{-itH_N} ψ` sampled every `dt` up to `t_end`.
    pub fn evolve(&self, psi0: &FockState, t_end: f64, dt: f64, options: &KrylovOptions) -> Result<Trajectory> {
        let steps = step_count(t_end, dt)?;
        let h = t_end / steps as f64;
        let mut times = vec![0.0];
        let mut states = vec![psi0.clone()];
        let mut state = psi0.clone();
        for s in 1..=steps {
            state = krylov_propagate(&self.hamiltonian, &state, h, options)?.state;
            times.push(s as f64 * h);
            states.push(state.clone());
        }
        Ok(Trajectory { times, states })
    }

    /// Smallest eigenvalue of `H_N` by Lanczos.
    pub fn ground_energy(&self) -> Result<f64> {
        lanczos_min_eigenvalue(&self.hamiltonian, 1e-10)
    }
}

pub(crate) fn step_count(t_end: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(invalid("dt", "need dt > 0 and T ≥ 0"));
    }
    Ok(((t_end / dt).round() as usize).max(if t_end > 0.0 { 1 } else { 0 }))
}

/// States sampled along a propagation.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<FockState>,
}

impl Trajectory {
    pub fn last(&self) -> &FockState {
        self.states.last().expect("trajectories contain the initial state")
    }

    pub fn max_norm_drift(&self) -> f64 {
        let n0 = self.states[0].norm();
        self.states.iter().map(|s| (s.norm() - n0).abs()).fold(0.0, f64::max)
    }
}

/// `γ⁽¹⁾` normalized to unit trace.
#[derive(Clone, Debug)]
pub struct OneBodyDensityMatrix {
    matrix: DMatrix<Complex64>,
}

impl OneBodyDensityMatrix {
    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Self {
        Self { matrix }
    }

    /// Rank-one projection `|φ⟩⟨φ|`.
    pub fn pure(phi: &[Complex64]) -> Self {
        let k = phi.len();
        Self {
            matrix: DMatrix::from_fn(k, k, |i, j| phi[i] * phi[j].conj()),
        }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(&self.matrix).0
    }

    /// `Tr(A γ)`.
    pub fn expectation(&self, a: &DMatrix<Complex64>) -> f64 {
        (a * &self.matrix).trace().re
    }
}

/// `γ⁽¹⁾(i, j) = ⟨ψ, a†_j a_i ψ⟩ / N`, with `N` the sector size or, on truncated
/// bases, the expected particle number.
pub fn one_pdm(psi: &FockState) -> Result<OneBodyDensityMatrix> {
    let basis = psi.basis();
    let k = basis.modes();
    let amps = psi.amplitudes();
    let mut m = DMatrix::<Complex64>::zeros(k, k);
    let mut occ = vec![0u8; k];
    for col in 0..basis.dim() {
        let c = amps[col];
        if c == Complex64::new(0.0, 0.0) {
            continue;
        }
        occ.copy_from_slice(basis.occupation(col));
        for j in 0..k {
            let nj = occ[j];
            if nj == 0 {
                continue;
            }
            occ[j] -= 1;
            for i in 0..k {
                let amp = ((nj as f64) * (occ[i] as f64 + 1.0)).sqrt();
                occ[i] += 1;
                let row = basis.index_of(&occ).expect("number-preserving");
                // ⟨ψ, a†_j a_i ψ⟩ = Σ conj(ψ_row) ψ_col ⟨row| a†_j a_i |col⟩: here row = a†_i a_j col.
                m[(j, i)] += amps[row].conj() * c * amp;
                occ[i] -= 1;
            }
            occ[j] += 1;
        }
    }
    let norm = match basis.kind() {
        BasisKind::Sector { particles } => particles as f64 * psi.norm().powi(2),
        BasisKind::Truncated { .. } => psi.number_expectation(),
    };
    if norm <= 0.0 {
        return Err(invalid("psi", "state carries no particles"));
    }
    Ok(OneBodyDensityMatrix { matrix: m / Complex64::new(norm, 0.0) })
}

/// Distances of `γ⁽¹⁾` from the pure condensate `|φ⟩⟨φ|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CondensationMetrics {
    /// `Tr|γ⁽¹⁾ - |φ⟩⟨φ||`.
    pub trace_distance: f64,
    /// `1 - ⟨φ, γ⁽¹⁾ φ⟩`.
    pub depletion: f64,
    /// `N Tr((1 - Δ) q γ⁽¹⁾ q)` with `q = 1 - |φ⟩⟨φ|`.
    pub kinetic_excess: f64,
}

pub fn condensation_metrics(
    gamma: &OneBodyDensityMatrix,
    phi: &[Complex64],
    one_minus_laplacian: &DMatrix<Complex64>,
    particles: usize,
) -> CondensationMetrics {
    let p = OneBodyDensityMatrix::pure(phi);
    let diff = gamma.matrix() - p.matrix();
    let trace_distance = trace_norm(&diff);
    let phi_v = nalgebra::DVector::from_column_slice(phi);
    let overlap = (phi_v.adjoint() * gamma.matrix() * &phi_v)[(0, 0)].re;
    let k = phi.len();
    let q = DMatrix::<Complex64>::identity(k, k) - p.matrix();
    let kinetic_excess = particles as f64 * (one_minus_laplacian * &q * gamma.matrix() * &q).trace().re;
    CondensationMetrics {
        trace_distance,
        depletion: 1.0 - overlap,
        kinetic_excess,
    }
}

/// Kinetic energy per particle computed as `N⁻¹⟨ψ, dΓ₁(-Δ)ψ⟩` and as `Tr(-Δ γ⁽¹⁾)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KineticPerParticle {
    pub from_operator: f64,
    pub from_density: f64,
}

pub fn kinetic_per_particle(psi: &FockState, kinetic: &DMatrix<Complex64>) -> Result<KineticPerParticle> {
    let particles = match psi.basis().kind() {
        BasisKind::Sector { particles } => particles,
        BasisKind::Truncated { .. } => return Err(invalid("psi", "expects an N-particle state")),
    };
    let op = dgamma1(psi.basis(), kinetic)?;
    let from_operator = psi.expectation(&op)?.re / particles as f64;
    let from_density = one_pdm(psi)?.expectation(kinetic);
    Ok(KineticPerParticle {
        from_operator,
        from_density,
    })
}

/// Slack in `Tr((1-Δ)γ) ≥ ⟨φ,(1-Δ)φ⟩ - Tr|γ - |φ⟩⟨φ|| · max σ(1-Δ)`; nonnegative when it holds.
pub fn fatou_margin(gamma: &OneBodyDensityMatrix, phi: &[Complex64], one_minus_laplacian: &DMatrix<Complex64>) -> f64 {
    let metrics = condensation_metrics(gamma, phi, one_minus_laplacian, 1);
    let lambda_max = hermitian_eigen(one_minus_laplacian).0.last().copied().unwrap_or(0.0);
    let phi_v = nalgebra::DVector::from_column_slice(phi);
    let phi_energy = (phi_v.adjoint() * one_minus_laplacian * &phi_v)[(0, 0)].re;
    gamma.expectation(one_minus_laplacian) - (phi_energy - metrics.trace_distance * lambda_max)
}

/// One row of the per-trajectory metrics file.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub t: f64,
    pub trace_distance: f64,
    pub depletion: f64,
    pub kinetic_excess: f64,
    pub energy: f64,
}

pub const METRICS_HEADER: &str = "t,trace_distance,depletion,kinetic_excess,energy";

pub fn write_metrics_csv<W: Write>(rows: &[MetricsRow], mut out: W) -> Result<()> {
    writeln!(out, "{METRICS_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
            r.t, r.trace_distance, r.depletion, r.kinetic_excess, r.energy
        )?;
    }
    Ok(())
}
