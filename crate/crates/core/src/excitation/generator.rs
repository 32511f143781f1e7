//! The excitation generator `G_N = ½ Σ_j 1^{≤N}(𝔾_j + 𝔾_j†)1^{≤N}` in frame
//! coordinates.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::frame::{mean_field, ExcitationFrame};
use super::map::ExcitationMap;
use crate::error::{invalid, Result};
use crate::fock::dense::random_vector;
use crate::fock::sparse::max_abs_diff;
use crate::fock::{
    cubic_creation, dgamma1, dgamma2, number_function, pair_creation, smeared_annihilation, smeared_creation,
    OccupationBasis, SparseOperator, TwoBodyKernel,
};
use crate::manybody::{build_hamiltonian, ModeModel};

/// Mean-field data of one frame, expressed in frame coordinates; index 0 is the
/// condensate and the blocks labelled "perp" act on `𝔥_⊥ = {u}^⊥`.
#[derive(Clone, Debug)]
pub struct FrameKernels {
    /// `h` on `𝔥_⊥`, i.e. `qhq`.
    pub h_perp: DMatrix<Complex64>,
    /// `qhu`.
    pub h_cross: Vec<Complex64>,
    /// `⟨u, h u⟩`.
    pub h_condensate: f64,
    /// `K₁ = q K̃₁ q`.
    pub k1: DMatrix<Complex64>,
    /// `K₂ = (q ⊗ q) K̃₂` as the coefficient matrix of `a†a†`.
    pub k2: DMatrix<Complex64>,
    /// `q (w ∗ |u|² - μ) q`.
    pub potential_perp: DMatrix<Complex64>,
    /// `q (w ∗ |u|²) u`.
    pub potential_cross: Vec<Complex64>,
    /// `C[a, b, d] = ⟨f_a ⊗ f_b, w u ⊗ f_d⟩` for excitation modes.
    pub cubic: Vec<Complex64>,
    /// `(q ⊗ q) w (q ⊗ q)`.
    pub quartic: TwoBodyKernel,
    pub chemical_potential: f64,
}

impl FrameKernels {
    pub fn new(model: &ModeModel, frame: &ExcitationFrame) -> Result<Self> {
        let k = model.modes();
        if frame.modes() != k {
            return Err(invalid("frame", "mode count differs from the model"));
        }
        let e = k - 1;
        let u = frame.condensate();
        let mf = mean_field(model, &u);
        let vf = model.interaction().rotated(frame.matrix())?;
        let h = frame.to_frame(&mf.hartree);
        let w = frame.to_frame(&mf.potential);
        let mu = mf.chemical_potential;
        let block = |m: &DMatrix<Complex64>| m.view((1, 1), (e, e)).into_owned();
        let k1 = DMatrix::from_fn(e, e, |a, b| vf.get(a + 1, 0, 0, b + 1));
        let k2 = DMatrix::from_fn(e, e, |a, b| vf.get(a + 1, b + 1, 0, 0));
        let mut cubic = vec![Complex64::new(0.0, 0.0); e * e * e];
        for a in 0..e {
            for b in 0..e {
                for d in 0..e {
                    cubic[(a * e + b) * e + d] = vf.get(a + 1, b + 1, 0, d + 1);
                }
            }
        }
        let quartic = TwoBodyKernel::from_fn(e, |a, c, b, d| vf.get(a + 1, c + 1, b + 1, d + 1));
        Ok(Self {
            h_perp: block(&h),
            h_cross: (1..k).map(|a| h[(a, 0)]).collect(),
            h_condensate: h[(0, 0)].re,
            k1,
            k2,
            potential_perp: block(&w) - DMatrix::identity(e, e) * Complex64::new(mu, 0.0),
            potential_cross: (1..k).map(|a| w[(a, 0)]).collect(),
            cubic,
            quartic,
            chemical_potential: mu,
        })
    }

    pub fn excitation_modes(&self) -> usize {
        self.h_perp.nrows()
    }
}

/// The five unsymmetrized parts `𝔾₀ … 𝔾₄` and the assembled generator.
#[derive(Clone, Debug)]
pub struct GeneratorParts {
    pub parts: [SparseOperator; 5],
    pub total: SparseOperator,
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Assembles `G_N` on a truncated excitation basis; the basis cutoff realizes
/// `1^{≤m}` on both sides.
///
/// In the transported frame the coordinates of `Φ_N(t)` evolve by this operator,
/// where `dΓ₁(h)` is restricted to `dΓ₁(qhq)`.
pub fn build_generator(kernels: &FrameKernels, particles: usize, basis: &OccupationBasis) -> Result<GeneratorParts> {
    if particles < 2 {
        return Err(invalid("N", "the generator needs N ≥ 2"));
    }
    if basis.modes() != kernels.excitation_modes() {
        return Err(invalid("basis", "mode count differs from the frame's excitation space"));
    }
    let n = particles as f64;
    let inv = 1.0 / (n - 1.0);
    let depl = |k: usize| (n - k as f64).max(0.0);

    let g0 = dgamma1(basis, &kernels.h_perp)?
        .add(&dgamma1(basis, &kernels.k1)?.compose(&number_function(basis, |k| depl(k) * inv))?)?
        .add(&dgamma1(basis, &kernels.potential_perp)?.compose(&number_function(basis, |k| (1.0 - k as f64) * inv))?)?;

    let g1 = smeared_creation(basis, &kernels.potential_cross)?
        .compose(&number_function(basis, |k| -2.0 * k as f64 * depl(k).sqrt() * inv))?;

    let g2 = pair_creation(basis, &kernels.k2)?
        .compose(&number_function(basis, |k| (depl(k) * (depl(k) - 1.0).max(0.0)).sqrt() * inv))?;

    let g3 = cubic_creation(basis, &kernels.cubic)?
        .compose(&number_function(basis, |k| CUBIC_WEIGHT * depl(k).sqrt() * inv))?;

    let g4 = dgamma2(basis, &kernels.quartic)?.scaled(c(inv));

    let parts = [g0, g1, g2, g3, g4];
    let mut total = SparseOperator::zeros(basis.dim());
    for p in &parts {
        total = total.add(&p.hermitian_part())?;
    }
    Ok(GeneratorParts {
        parts,
        total: total.with_hermitian_flag(true),
    })
}

/// Weight of the cubic part: the `a†a†a(u)a` terms of `dΓ₂(w)` contribute
/// `𝔾₃ + 𝔾₃†` with unit weight, so the half in `½(𝔾₃ + 𝔾₃†)` is compensated.
pub const CUBIC_WEIGHT: f64 = 2.0;

/// The part of `(i∂_t U_N)U_N†` that survives on `ℱ_⊥`:
/// `-⟨u,hu⟩(N - 𝒩) - a†(qhu)√(N - 𝒩) - √(N - 𝒩)a(qhu)`.
pub fn time_derivative_part(kernels: &FrameKernels, particles: usize, basis: &OccupationBasis) -> Result<SparseOperator> {
    let n = particles as f64;
    let e = kernels.h_condensate;
    let sqrt_depl = number_function(basis, |k| (n - k as f64).max(0.0).sqrt());
    let diag = number_function(basis, |k| -e * (n - k as f64));
    let create = smeared_creation(basis, &kernels.h_cross)?.compose(&sqrt_depl)?;
    let annihilate = sqrt_depl.compose(&smeared_annihilation(basis, &kernels.h_cross)?)?;
    Ok(diag.sub(&create)?.sub(&annihilate)?.with_hermitian_flag(true))
}

/// Residuals of the frozen-time identity `U_N H_N U_N† = G_N - (i∂_t U_N)U_N†`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConjugationReport {
    /// Largest entry of the difference of the two matrices.
    pub matrix_residual: f64,
    /// Largest `|⟨Φ, (L - R) Φ'⟩|` over random unit vectors.
    pub form_residual: f64,
    pub dimension: usize,
}

pub fn conjugation_check<R: Rng + ?Sized>(
    model: &ModeModel,
    frame: &ExcitationFrame,
    map: &ExcitationMap,
    samples: usize,
    rng: &mut R,
) -> Result<ConjugationReport> {
    let particles = map.particles();
    let kernels = FrameKernels::new(model, frame)?;
    let hn = build_hamiltonian(model, map.sector())?;
    let lhs = map.conjugate(&hn)?.to_dense();
    let gen = build_generator(&kernels, particles, map.excitations())?;
    let d = time_derivative_part(&kernels, particles, map.excitations())?;
    let rhs = gen.total.sub(&d)?.to_dense();
    let diff = &lhs - &rhs;
    let mut form: f64 = 0.0;
    for _ in 0..samples {
        let x = nalgebra::DVector::from_vec(random_vector(diff.nrows(), rng));
        let y = nalgebra::DVector::from_vec(random_vector(diff.nrows(), rng));
        form = form.max((x.adjoint() * &diff * y)[(0, 0)].norm());
    }
    Ok(ConjugationReport {
        matrix_residual: max_abs_diff(&lhs, &rhs),
        form_residual: form,
        dimension: lhs.nrows(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::DEFAULT_DIMENSION_CAP;
    use crate::interaction::{PotentialProfile, ScaledPotential};
    use crate::spectral::TorusGrid;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn model(b: f64, n: usize, k: usize) -> ModeModel {
        let grid = TorusGrid::new(5.0, 32).unwrap();
        let pot = ScaledPotential::new(PotentialProfile::disk_with_coupling(b, 1.0), n, 0.5, grid).unwrap();
        ModeModel::plane_waves(&pot, k).unwrap()
    }

    fn setup(b: f64, n: usize, k: usize, seed: u64) -> (ModeModel, ExcitationFrame, ExcitationMap) {
        let m = model(b, n, k);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_vector(k, &mut rng);
        let frame = ExcitationFrame::from_condensate(&u, 0.0).unwrap();
        let sector = Arc::new(OccupationBasis::sector(k, n, DEFAULT_DIMENSION_CAP).unwrap());
        let map = ExcitationMap::new(&frame, sector, DEFAULT_DIMENSION_CAP).unwrap();
        (m, frame, map)
    }

    #[test]
    fn frozen_time_conjugation() {
        let (m, frame, map) = setup(-5.85, 3, 4, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = conjugation_check(&m, &frame, &map, 10, &mut rng).unwrap();
        assert!(r.matrix_residual < 1e-10, "{r:?}");
        assert!(r.form_residual < 1e-10, "{r:?}");
    }

    #[test]
    fn number_budget_of_parts() {
        let (m, frame, map) = setup(-3.0, 3, 4, 3);
        let kernels = FrameKernels::new(&m, &frame).unwrap();
        let basis = map.excitations();
        let gen = build_generator(&kernels, 3, basis).unwrap();
        let shifts = [0i64, 1, 2, 1, 0];
        for (part, shift) in gen.parts.iter().zip(shifts) {
            for (r, c, _) in part.triplets() {
                assert_eq!(basis.total(r) as i64 - basis.total(c) as i64, shift);
            }
        }
        assert!(gen.total.hermiticity_residual() < 1e-13);
    }

    #[test]
    fn free_generator_has_only_one_body_part() {
        let (m, frame, map) = setup(0.0, 3, 4, 4);
        let kernels = FrameKernels::new(&m, &frame).unwrap();
        let gen = build_generator(&kernels, 3, map.excitations()).unwrap();
        for part in &gen.parts[1..] {
            assert!(part.max_abs() < 1e-15);
        }
        let expected = dgamma1(map.excitations(), &frame.perp_block(m.kinetic())).unwrap();
        assert!(max_abs_diff(&gen.parts[0].to_dense(), &expected.to_dense()) < 1e-13);
    }
}
