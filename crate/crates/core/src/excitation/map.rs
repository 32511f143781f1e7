//! The excitation map `U_N : 𝔥^{⊗_s N} → ℱ^{≤N}_⊥` and the substitution rules.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::frame::ExcitationFrame;
use crate::error::{LabError, Result};
use crate::fock::dense::random_vector;
use crate::fock::sparse::max_abs_diff;
use crate::fock::{
    dgamma1, lift, number_function, smeared_annihilation, smeared_creation, FockState, OccupationBasis,
    SparseOperator, TripletBuilder,
};

/// Explicit matrix of `U_N` for one frame.
///
/// Columns are indexed by the `N`-particle sector over all `K` modes, rows by
/// `ℱ^{≤N}` over the `K - 1` excitation modes of the frame. A sector state with
/// `n₀` condensate particles and excitation occupations `m` (in frame modes)
/// maps to `|m⟩`.
#[derive(Clone, Debug)]
pub struct ExcitationMap {
    particles: usize,
    sector: Arc<OccupationBasis>,
    excitations: Arc<OccupationBasis>,
    matrix: SparseOperator,
}

impl ExcitationMap {
    pub fn new(frame: &ExcitationFrame, sector: Arc<OccupationBasis>, cap: usize) -> Result<Self> {
        let particles = sector.max_total();
        if sector.modes() != frame.modes() {
            return Err(LabError::Dimension {
                context: "excitation map",
                expected: frame.modes(),
                found: sector.modes(),
            });
        }
        let excitations = Arc::new(OccupationBasis::truncated(frame.excitation_modes(), particles, cap)?);
        // Γ(F†) expresses a sector state in frame occupations.
        let rotation = lift(&sector, &frame.matrix().adjoint())?;
        let mut b = TripletBuilder::new(sector.dim());
        for (r, c, v) in rotation.triplets() {
            let row = excitations
                .index_of(&sector.occupation(r)[1..])
                .expect("excitation part has at most N particles");
            b.push(row, c, v);
        }
        Ok(Self {
            particles,
            sector,
            excitations,
            matrix: b.build(false),
        })
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn sector(&self) -> &Arc<OccupationBasis> {
        &self.sector
    }

    pub fn excitations(&self) -> &Arc<OccupationBasis> {
        &self.excitations
    }

    pub fn matrix(&self) -> &SparseOperator {
        &self.matrix
    }

    /// `Φ = U_N Ψ`.
    pub fn apply(&self, psi: &FockState) -> Result<FockState> {
        self.check(psi, &self.sector)?;
        FockState::new(self.excitations.clone(), self.matrix.apply(psi.amplitudes()))
    }

    /// `Ψ = U_N† Φ` for `Φ ∈ ℱ^{≤N}_⊥`.
    pub fn adjoint_apply(&self, phi: &FockState) -> Result<FockState> {
        self.check(phi, &self.excitations)?;
        FockState::new(self.sector.clone(), self.matrix.adjoint().apply(phi.amplitudes()))
    }

    /// `U_N A U_N†` for an operator on the sector.
    pub fn conjugate(&self, a: &SparseOperator) -> Result<SparseOperator> {
        self.matrix.compose(a)?.compose(&self.matrix.adjoint())
    }

    /// `U_N† B U_N` for an operator on `ℱ^{≤N}_⊥`.
    pub fn pull_back(&self, b: &SparseOperator) -> Result<SparseOperator> {
        self.matrix.adjoint().compose(b)?.compose(&self.matrix)
    }

    /// `Ψ_{N,0} = U_N† 1^{≤N} Φ₀` for an excitation vector on any cutoff.
    pub fn initial_state(&self, phi0: &FockState) -> Result<FockState> {
        let truncated = phi0.project_number(self.particles);
        let mut amps = FockState::zeros(self.excitations.clone());
        for (i, a) in truncated.amplitudes().iter().enumerate() {
            if *a == Complex64::new(0.0, 0.0) {
                continue;
            }
            let j = self
                .excitations
                .index_of(phi0.basis().occupation(i))
                .ok_or_else(|| LabError::Incompatible("Φ₀ uses a different number of modes".into()))?;
            amps.amplitudes_mut()[j] = *a;
        }
        self.adjoint_apply(&amps)
    }

    fn check(&self, s: &FockState, basis: &Arc<OccupationBasis>) -> Result<()> {
        if s.basis().kind() == basis.kind() && s.basis().modes() == basis.modes() {
            Ok(())
        } else {
            Err(LabError::Incompatible("state is not in the expected basis".into()))
        }
    }
}

/// Largest residual of each identity over the random test functions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SubstitutionReport {
    /// `U a†(u)a(u) U† = N - 𝒩`.
    pub condensate_number: f64,
    /// `U a†(f)a(u) U† = a†(f) √(N - 𝒩)`.
    pub creation: f64,
    /// `U a†(u)a(g) U† = √(N - 𝒩) a(g)`.
    pub annihilation: f64,
    /// `U a†(f)a(g) U† = a†(f)a(g)`.
    pub excitation: f64,
    /// `U† dΓ₁(qAq) U = dΓ₁(qAq)` for random Hermitian `A`.
    pub remark: f64,
}

impl SubstitutionReport {
    pub fn max(&self) -> f64 {
        [self.condensate_number, self.creation, self.annihilation, self.excitation, self.remark]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

fn outer(f: &[Complex64], g: &[Complex64]) -> DMatrix<Complex64> {
    DMatrix::from_fn(f.len(), g.len(), |i, j| f[i] * g[j].conj())
}

/// Assembles both sides of the substitution rules as dense matrices on
/// `ℱ^{≤N}_⊥` for `samples` random `f, g ⊥ u`.
pub fn verify_substitution_rules<R: Rng + ?Sized>(
    map: &ExcitationMap,
    frame: &ExcitationFrame,
    samples: usize,
    rng: &mut R,
) -> Result<SubstitutionReport> {
    let n = map.particles() as f64;
    let sector = map.sector();
    let exc = map.excitations();
    let u = frame.condensate();
    let sqrt_depl = number_function(exc, |k| (n - k as f64).max(0.0).sqrt());
    let mut report = SubstitutionReport::default();

    let lhs = map.conjugate(&dgamma1(sector, &outer(&u, &u))?)?.to_dense();
    let rhs = number_function(exc, |k| n - k as f64).to_dense();
    report.condensate_number = max_abs_diff(&lhs, &rhs);

    for _ in 0..samples {
        let f_perp = random_vector(frame.excitation_modes(), rng);
        let g_perp = random_vector(frame.excitation_modes(), rng);
        let f = frame.from_perp(&f_perp);
        let g = frame.from_perp(&g_perp);

        let lhs = map.conjugate(&dgamma1(sector, &outer(&f, &u))?)?.to_dense();
        let rhs = smeared_creation(exc, &f_perp)?.compose(&sqrt_depl)?.to_dense();
        report.creation = report.creation.max(max_abs_diff(&lhs, &rhs));

        let lhs = map.conjugate(&dgamma1(sector, &outer(&u, &g))?)?.to_dense();
        let rhs = sqrt_depl.compose(&smeared_annihilation(exc, &g_perp)?)?.to_dense();
        report.annihilation = report.annihilation.max(max_abs_diff(&lhs, &rhs));

        let lhs = map.conjugate(&dgamma1(sector, &outer(&f, &g))?)?.to_dense();
        let rhs = dgamma1(exc, &outer(&f_perp, &g_perp))?.to_dense();
        report.excitation = report.excitation.max(max_abs_diff(&lhs, &rhs));

        let a = crate::fock::dense::random_hermitian(frame.modes(), rng);
        let q = frame.projector_q();
        let qaq = &q * &a * &q;
        let lhs = map.pull_back(&dgamma1(exc, &frame.perp_block(&a))?)?.to_dense();
        let rhs = dgamma1(sector, &qaq)?.to_dense();
        report.remark = report.remark.max(max_abs_diff(&lhs, &rhs));
    }
    Ok(report)
}
