//! Identity and oracle suites behind `lab verify`. Every check reports its
//! residual against a fixed tolerance; random inputs come from one seed.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::Envelope;
use crate::bogoliubov::BogKernels;
use crate::effective::townes_ground_state;
use crate::error::Result;
use crate::excitation::{
    commutator_checks, conjugation_check, power_inequality_margin, verify_substitution_rules, ExcitationFrame,
    ExcitationMap,
};
use crate::fock::dense::{expm_hermitian, random_hermitian, random_unitary, random_vector};
use crate::fock::oracle::{random_two_body, TensorOracle};
use crate::fock::sparse::max_abs_diff;
use crate::fock::{dgamma1, dgamma2, krylov_propagate, FockState, KrylovOptions, ModeBasis, OccupationBasis, SiteModel};
use crate::interaction::{PotentialProfile, ScaledPotential, Stability};
use crate::manybody::ModeModel;
use crate::spectral::{TorusField, TorusGrid};

/// Tolerance of the operator identities and tensor-product oracles.
pub const IDENTITY_TOLERANCE: f64 = 1e-12;
/// Tolerance of the frozen-time generator identity and the weight commutator.
pub const GENERATOR_TOLERANCE: f64 = 1e-10;
/// Tolerance of Krylov propagation against the dense exponential.
pub const KRYLOV_TOLERANCE: f64 = 1e-9;
/// Tolerance of the resolvent quadrature for `[ℛ^{1/2}, B]`.
pub const QUADRATURE_TOLERANCE: f64 = 1e-6;
/// Largest sector handed to the dense oracles.
pub const ORACLE_DIMENSION_CAP: usize = 200;
/// Largest basis used by the operator-inequality checks.
pub const INEQUALITY_DIMENSION_CAP: usize = 500;

/// One verified identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    /// Hilbert-space dimension of the check.
    pub dims: usize,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckResult {
    /// Passes when `residual ≤ tolerance`; NaN fails.
    pub fn at_most(name: impl Into<String>, dims: usize, residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            dims,
            residual,
            tolerance,
            passed: residual <= tolerance,
        }
    }

    /// Passes when `value ≥ -tolerance`; the reported residual is `max(0, -value)`.
    pub fn nonnegative(name: impl Into<String>, dims: usize, value: f64, tolerance: f64) -> Self {
        Self::at_most(name, dims, if value.is_nan() { f64::NAN } else { (-value).max(0.0) }, tolerance)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub envelope: Envelope,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Runs every suite. `profile` supplies the interaction of the generator,
/// weight and kernel checks.
pub fn run_verification(envelope: Envelope, seed: u64, profile: &PotentialProfile) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    checks.extend(substitution_suite(envelope, seed)?);
    checks.extend(conjugation_suite(envelope, seed.wrapping_add(1), profile)?);
    checks.extend(second_quantization_suite(envelope, seed.wrapping_add(2))?);
    checks.extend(krylov_suite(envelope, seed.wrapping_add(3), profile)?);
    checks.extend(weight_suite(envelope, seed.wrapping_add(4), profile)?);
    checks.extend(kernel_suite(seed.wrapping_add(5), profile)?);
    checks.extend(sign_flip_suite(seed.wrapping_add(6))?);
    Ok(VerifyReport { envelope, seed, checks })
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normalized(v: Vec<Complex64>) -> Vec<Complex64> {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

fn generator_model(profile: &PotentialProfile, particles: usize, modes: usize) -> Result<ModeModel> {
    let grid = TorusGrid::new(5.0, 32)?;
    let pot = ScaledPotential::new(*profile, particles, 0.5, grid)?;
    ModeModel::plane_waves(&pot, modes)
}

fn random_map(particles: usize, modes: usize, rng: &mut ChaCha8Rng) -> Result<(ExcitationFrame, ExcitationMap)> {
    let u = random_vector(modes, rng);
    let frame = ExcitationFrame::from_condensate(&u, 0.0)?;
    let sector = Arc::new(OccupationBasis::sector(modes, particles, ORACLE_DIMENSION_CAP)?);
    let map = ExcitationMap::new(&frame, sector, ORACLE_DIMENSION_CAP)?;
    Ok((frame, map))
}

/// The four substitution rules and the `dΓ₁(qAq)` remark, as dense matrices.
pub fn substitution_suite(envelope: Envelope, seed: u64) -> Result<Vec<CheckResult>> {
    let (cases, samples): (&[(usize, usize)], usize) = match envelope {
        Envelope::Tiny => (&[(2, 2), (2, 3), (3, 3)], 5),
        Envelope::Full => (&[(2, 2), (2, 3), (2, 4), (3, 2), (3, 3), (3, 4)], 20),
    };
    let mut rng = rng(seed);
    let mut out = Vec::new();
    for &(particles, modes) in cases {
        let (frame, map) = random_map(particles, modes, &mut rng)?;
        let report = verify_substitution_rules(&map, &frame, samples, &mut rng)?;
        let dims = map.excitations().dim();
        let tag = format!("N={particles},K={modes}");
        for (name, residual) in [
            ("condensate_number", report.condensate_number),
            ("creation", report.creation),
            ("annihilation", report.annihilation),
            ("excitation", report.excitation),
            ("projected_one_body", report.remark),
        ] {
            out.push(CheckResult::at_most(
                format!("substitution.{name}[{tag}]"),
                dims,
                residual,
                IDENTITY_TOLERANCE,
            ));
        }
    }
    Ok(out)
}

/// Frozen-time `U_N H_N U_N†` against the assembled generator.
pub fn conjugation_suite(envelope: Envelope, seed: u64, profile: &PotentialProfile) -> Result<Vec<CheckResult>> {
    let (cases, samples): (&[(usize, usize)], usize) = match envelope {
        Envelope::Tiny => (&[(3, 3)], 3),
        Envelope::Full => (&[(2, 4), (3, 4)], 10),
    };
    let mut rng = rng(seed);
    let mut out = Vec::new();
    for &(particles, modes) in cases {
        let model = generator_model(profile, particles, modes)?;
        let (frame, map) = random_map(particles, modes, &mut rng)?;
        let report = conjugation_check(&model, &frame, &map, samples, &mut rng)?;
        let tag = format!("N={particles},K={modes}");
        out.push(CheckResult::at_most(
            format!("conjugation.matrix[{tag}]"),
            report.dimension,
            report.matrix_residual,
            GENERATOR_TOLERANCE,
        ));
        out.push(CheckResult::at_most(
            format!("conjugation.forms[{tag}]"),
            report.dimension,
            report.form_residual,
            GENERATOR_TOLERANCE,
        ));
    }
    Ok(out)
}

/// Sparse `dΓ₁`, `dΓ₂` against the tensor-product oracle.
pub fn second_quantization_suite(envelope: Envelope, seed: u64) -> Result<Vec<CheckResult>> {
    let cases: &[(usize, usize)] = match envelope {
        Envelope::Tiny => &[(3, 2), (2, 3), (3, 3)],
        Envelope::Full => &[(3, 2), (2, 3), (3, 3), (2, 4), (4, 3), (3, 4), (4, 4)],
    };
    let mut rng = rng(seed);
    let mut out = Vec::new();
    for &(modes, particles) in cases {
        let basis = OccupationBasis::sector(modes, particles, ORACLE_DIMENSION_CAP)?;
        let oracle = TensorOracle::new(&basis)?;
        let t = random_hermitian(modes, &mut rng);
        let s = random_two_body(modes, &mut rng);
        let tag = format!("K={modes},N={particles}");
        let d1 = max_abs_diff(&dgamma1(&basis, &t)?.to_dense(), &oracle.one_body(&t));
        let d2 = max_abs_diff(&dgamma2(&basis, &s)?.to_dense(), &oracle.two_body(&s));
        out.push(CheckResult::at_most(format!("dgamma1[{tag}]"), basis.dim(), d1, IDENTITY_TOLERANCE));
        out.push(CheckResult::at_most(format!("dgamma2[{tag}]"), basis.dim(), d2, IDENTITY_TOLERANCE));
    }
    Ok(out)
}

/// Krylov propagation against `e^{-iHt}` on random and physical Hamiltonians.
pub fn krylov_suite(envelope: Envelope, seed: u64, profile: &PotentialProfile) -> Result<Vec<CheckResult>> {
    let cases: &[(usize, usize)] = match envelope {
        Envelope::Tiny => &[(3, 3), (4, 3)],
        Envelope::Full => &[(3, 3), (4, 3), (4, 4), (5, 4), (6, 3)],
    };
    let options = KrylovOptions::default();
    let mut rng = rng(seed);
    let mut out = Vec::new();
    let compare = |name: String, h: &crate::fock::SparseOperator, psi: FockState, t: f64| -> Result<CheckResult> {
        let dense = expm_hermitian(&h.to_dense(), t) * nalgebra::DVector::from_column_slice(psi.amplitudes());
        let krylov = krylov_propagate(h, &psi, t, &options)?.state;
        let residual = krylov
            .amplitudes()
            .iter()
            .zip(dense.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        Ok(CheckResult::at_most(name, psi.dim(), residual, KRYLOV_TOLERANCE))
    };
    for &(modes, particles) in cases {
        let basis = Arc::new(OccupationBasis::sector(modes, particles, ORACLE_DIMENSION_CAP)?);
        let h = dgamma1(&basis, &random_hermitian(modes, &mut rng))?.add(&dgamma2(&basis, &random_two_body(modes, &mut rng))?)?;
        let psi = FockState::random(basis, &mut rng);
        out.push(compare(format!("krylov.random[K={modes},N={particles}]"), &h, psi, 1.0)?);
    }
    let particles = 3;
    let modes = match envelope {
        Envelope::Tiny => 4,
        Envelope::Full => 6,
    };
    let model = generator_model(profile, particles, modes)?;
    let basis = Arc::new(OccupationBasis::sector(modes, particles, ORACLE_DIMENSION_CAP)?);
    let h = crate::manybody::build_hamiltonian(&model, &basis)?;
    let psi = FockState::random(basis, &mut rng);
    out.push(compare(format!("krylov.hamiltonian[K={modes},N={particles}]"), &h, psi, 0.5)?);
    Ok(out)
}

fn site_setup(profile: &PotentialProfile, count: usize) -> Result<(DMatrix<f64>, DMatrix<Complex64>)> {
    let grid = TorusGrid::new(4.0, 32)?;
    let pot = ScaledPotential::new(*profile, 4, 0.5, grid)?;
    let sites = SiteModel::row(grid, count)?;
    let w = sites.pair_matrix(pot.field())?;
    let u = sites.sample(&TorusField::gaussian(grid, 1.0, (0.0, 0.0)).normalized());
    let g = DMatrix::from_fn(count, count, |i, j| u[i] * u[j] * w[(i, j)]);
    Ok((w, g))
}

/// Weight commutators, the square-root quadrature and the power inequality.
pub fn weight_suite(envelope: Envelope, seed: u64, profile: &PotentialProfile) -> Result<Vec<CheckResult>> {
    let cases: &[(usize, usize)] = match envelope {
        Envelope::Tiny => &[(3, 3)],
        Envelope::Full => &[(3, 3), (3, 5), (4, 4), (5, 5)],
    };
    let mut rng = rng(seed);
    let mut out = Vec::new();
    for &(sites, cutoff) in cases {
        let (w, g) = site_setup(profile, sites)?;
        let basis = OccupationBasis::truncated(sites, cutoff, INEQUALITY_DIMENSION_CAP)?;
        let dims = basis.dim();
        let tag = format!("sites={sites},cutoff={cutoff}");
        let report = commutator_checks(&basis, &w, &g)?;
        out.push(CheckResult::at_most(
            format!("weight.commutator[{tag}]"),
            dims,
            report.commutator_residual,
            GENERATOR_TOLERANCE,
        ));
        out.push(CheckResult::at_most(
            format!("weight.sqrt_commutator[{tag}]"),
            dims,
            report.sqrt_commutator_residual,
            QUADRATURE_TOLERANCE,
        ));
        out.push(CheckResult::nonnegative(
            format!("weight.power_1.5[{tag}]"),
            dims,
            report.power_margin,
            GENERATOR_TOLERANCE,
        ));
        let abs = w.map(f64::abs);
        let rotation = random_unitary(sites, &mut rng);
        for s in [1.5, 2.0, 3.0] {
            out.push(CheckResult::nonnegative(
                format!("power_inequality.s={s}[{tag}]"),
                dims,
                power_inequality_margin(&basis, &abs, s, None)?,
                GENERATOR_TOLERANCE,
            ));
            out.push(CheckResult::nonnegative(
                format!("power_inequality.rotated.s={s}[{tag}]"),
                dims,
                power_inequality_margin(&basis, &abs, s, Some(&rotation))?,
                GENERATOR_TOLERANCE,
            ));
        }
    }
    Ok(out)
}

/// Bogoliubov kernels from the mode tensor against the FFT convolution route.
pub fn kernel_suite(seed: u64, profile: &PotentialProfile) -> Result<Vec<CheckResult>> {
    let grid = TorusGrid::new(5.0, 32)?;
    let modes = 6;
    let pot = ScaledPotential::new(*profile, 4, 0.5, grid)?;
    let basis = ModeBasis::plane_waves(grid, modes)?;
    let model = ModeModel::plane_waves(&pot, modes)?;
    let u = normalized(random_vector(modes, &mut rng(seed)));
    let fft = BogKernels::from_grid(&pot, &basis, &u)?;
    let tensor = BogKernels::from_model(&model, &u)?;
    let (leak, herm, sym) = tensor.structure_residuals(&u);
    Ok(vec![
        CheckResult::at_most("kernels.hartree", modes, max_abs_diff(&fft.hartree, &tensor.hartree), GENERATOR_TOLERANCE),
        CheckResult::at_most("kernels.k1", modes, max_abs_diff(&fft.k1, &tensor.k1), GENERATOR_TOLERANCE),
        CheckResult::at_most("kernels.k2", modes, max_abs_diff(&fft.k2, &tensor.k2), GENERATOR_TOLERANCE),
        CheckResult::at_most("kernels.structure", modes, leak.max(herm).max(sym), IDENTITY_TOLERANCE),
    ])
}

/// `w → -w` at `|b| = 2a*`: the stability class changes, the identities do not.
pub fn sign_flip_suite(seed: u64) -> Result<Vec<CheckResult>> {
    let a_star = townes_ground_state(1e-10)?.a_star;
    let focusing = PotentialProfile::disk_with_coupling(-2.0 * a_star, 1.0);
    let defocusing = focusing.negated();
    let classes = (focusing.classify(a_star), defocusing.classify(a_star));
    let switched = classes == (Stability::Unstable, Stability::Defocusing);
    let mut out = vec![CheckResult::at_most(
        "sign_flip.classification",
        1,
        if switched { 0.0 } else { 1.0 },
        0.0,
    )];
    for (label, profile) in [("focusing", focusing), ("defocusing", defocusing)] {
        for check in conjugation_suite(Envelope::Tiny, seed, &profile)?
            .into_iter()
            .chain(kernel_suite(seed, &profile)?)
        {
            out.push(CheckResult {
                name: format!("sign_flip.{label}.{}", check.name),
                ..check
            });
        }
    }
    Ok(out)
}
