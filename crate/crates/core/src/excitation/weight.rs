//! The local weight `ℛ = dΓ₂(|w_N|) + 1` and the operator identities and
//! inequalities built on it, checked as finite matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fock::dense::{hermitian_eigen, hermitian_power, max_generalized_eigenvalue, min_eigenvalue, operator_norm};
use crate::fock::sparse::max_abs_diff;
use crate::fock::{
    dgamma1, dgamma2, pair_creation, smooth_cutoff, smooth_cutoff_profile, ModeBasis, OccupationBasis, SparseOperator,
    TwoBodyKernel,
};
use crate::interaction::ScaledPotential;
use crate::spectral::{SpectralPlan, TorusField};

/// Largest basis on which the dense checks are run.
pub const DENSE_CHECK_CAP: usize = 500;

fn ensure_small(basis: &OccupationBasis) -> Result<()> {
    if basis.dim() > DENSE_CHECK_CAP {
        return Err(invalid(
            "basis",
            format!("dense weight checks need dim ≤ {DENSE_CHECK_CAP}, got {}", basis.dim()),
        ));
    }
    Ok(())
}

fn check_pair_matrix(pair: &DMatrix<f64>, modes: usize) -> Result<()> {
    if pair.nrows() != modes || pair.ncols() != modes {
        return Err(invalid("pair", "pair matrix must be modes × modes"));
    }
    if (pair - pair.transpose()).amax() > 1e-14 {
        return Err(invalid("pair", "pair matrix must be symmetric"));
    }
    Ok(())
}

/// `dΓ₂(A) = ½ Σ A[i,j] a†_i a†_j a_j a_i` for a two-body multiplication operator
/// given by its site values.
pub fn multiplication_dgamma2(basis: &OccupationBasis, pair: &DMatrix<f64>) -> Result<SparseOperator> {
    check_pair_matrix(pair, basis.modes())?;
    dgamma2(basis, &TwoBodyKernel::multiplication(pair))
}

/// `ℛ = dΓ₂(|W|) + 1`.
pub fn weight_operator(basis: &OccupationBasis, pair: &DMatrix<f64>) -> Result<SparseOperator> {
    let abs = pair.map(f64::abs);
    multiplication_dgamma2(basis, &abs)?.add(&SparseOperator::identity(basis.dim()))
}

/// `B = Σ g[i,j] a†_i a†_j`.
fn smeared_pair(basis: &OccupationBasis, g: &DMatrix<Complex64>) -> Result<SparseOperator> {
    pair_creation(basis, g)
}

/// The right-hand side of
/// `[ℛ, a†_x a†_y] = |W(x-y)| a†_x a†_y + Σ_z (|W(z-x)| + |W(z-y)|) a†_x a†_y a†_z a_z`,
/// integrated against `g(x, y)`.
pub fn weight_commutator_formula(
    basis: &OccupationBasis,
    pair: &DMatrix<f64>,
    g: &DMatrix<Complex64>,
) -> Result<SparseOperator> {
    check_pair_matrix(pair, basis.modes())?;
    let k = basis.modes();
    let abs = pair.map(f64::abs);
    let direct = DMatrix::from_fn(k, k, |i, j| g[(i, j)] * abs[(i, j)]);
    let mut out = smeared_pair(basis, &direct)?;
    for z in 0..k {
        let weighted = DMatrix::from_fn(k, k, |i, j| g[(i, j)] * (abs[(z, i)] + abs[(z, j)]));
        let mut occupation = DMatrix::zeros(k, k);
        occupation[(z, z)] = Complex64::new(1.0, 0.0);
        let term = smeared_pair(basis, &weighted)?.compose(&dgamma1(basis, &occupation)?)?;
        out = out.add(&term)?;
    }
    Ok(out)
}

/// `[ℛ^{1/2}, B]` from `(1/π) ∫₀^∞ √s (ℛ+s)⁻¹ [ℛ, B] (ℛ+s)⁻¹ ds`, with the
/// resolvents applied in the eigenbasis of `ℛ` and the `s`-integral done by an
/// exp-sinh rule.
pub fn sqrt_commutator_quadrature(r: &DMatrix<Complex64>, b: &DMatrix<Complex64>, step: f64) -> DMatrix<Complex64> {
    let (lambda, v) = hermitian_eigen(r);
    let commutator = r * b - b * r;
    let c = v.adjoint() * commutator * &v;
    let n = lambda.len();
    let mut acc = DMatrix::<Complex64>::zeros(n, n);
    let half_pi = std::f64::consts::FRAC_PI_2;
    let nodes = (4.5 / step).ceil() as i64;
    for k in -nodes..=nodes {
        let tau = k as f64 * step;
        let s = (half_pi * tau.sinh()).exp();
        if !s.is_finite() || s == 0.0 {
            continue;
        }
        let weight = step * half_pi * tau.cosh() * s * s.sqrt();
        for j in 0..n {
            for i in 0..n {
                acc[(i, j)] += c[(i, j)] * (weight / ((lambda[i] + s) * (lambda[j] + s)));
            }
        }
    }
    acc /= Complex64::new(std::f64::consts::PI, 0.0);
    &v * acc * v.adjoint()
}

/// Residuals of the weight identities on one basis.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WeightReport {
    pub dimension: usize,
    /// `[ℛ, B]` against its closed form.
    pub commutator_residual: f64,
    /// Dense `[ℛ^{1/2}, B]` against the resolvent integral.
    pub sqrt_commutator_residual: f64,
    /// Smallest eigenvalue of `ℛ^{2-ε} - dΓ₂(|W|^{2-ε})` with `ε = 1/2`.
    pub power_margin: f64,
}

/// Runs the three weight checks for `B = Σ g[i,j] a†_i a†_j`.
pub fn commutator_checks(basis: &OccupationBasis, pair: &DMatrix<f64>, g: &DMatrix<Complex64>) -> Result<WeightReport> {
    ensure_small(basis)?;
    let r = weight_operator(basis, pair)?;
    let b = smeared_pair(basis, g)?;
    let lhs = r.compose(&b)?.sub(&b.compose(&r)?)?;
    let rhs = weight_commutator_formula(basis, pair, g)?;
    let commutator_residual = max_abs_diff(&lhs.to_dense(), &rhs.to_dense());

    let rd = r.to_dense();
    let bd = b.to_dense();
    let root = hermitian_power(&rd, 0.5);
    let dense = &root * &bd - &bd * &root;
    let quad = sqrt_commutator_quadrature(&rd, &bd, 0.02);
    let sqrt_commutator_residual = max_abs_diff(&dense, &quad);

    let eps = 0.5;
    let powered = multiplication_dgamma2(basis, &pair.map(|w| w.abs().powf(2.0 - eps)))?.to_dense();
    let power_margin = min_eigenvalue(&(hermitian_power(&rd, 2.0 - eps) - powered));
    Ok(WeightReport {
        dimension: basis.dim(),
        commutator_residual,
        sqrt_commutator_residual,
        power_margin,
    })
}

/// Smallest eigenvalue of `[dΓ₂(A)]^s - dΓ₂(A^s)` for a nonnegative
/// multiplication operator `A`, optionally written in rotated modes `U`.
pub fn power_inequality_margin(
    basis: &OccupationBasis,
    pair: &DMatrix<f64>,
    s: f64,
    rotation: Option<&DMatrix<Complex64>>,
) -> Result<f64> {
    ensure_small(basis)?;
    check_pair_matrix(pair, basis.modes())?;
    if pair.iter().any(|&a| a < 0.0) {
        return Err(invalid("pair", "the multiplication operator must be nonnegative"));
    }
    if s < 1.0 {
        return Err(invalid("s", "the inequality holds for s ≥ 1"));
    }
    let represent = |m: &DMatrix<f64>| -> Result<DMatrix<Complex64>> {
        let kernel = TwoBodyKernel::multiplication(m);
        let kernel = match rotation {
            Some(u) => kernel.rotated(u)?,
            None => kernel,
        };
        Ok(dgamma2(basis, &kernel)?.to_dense())
    };
    let a = represent(pair)?;
    let a_s = represent(&pair.map(|x| x.powf(s)))?;
    Ok(min_eigenvalue(&(hermitian_power(&a, s) - a_s)))
}

/// `sup ⟨Ψ, dΓ₂(|w_N|) Ψ⟩ / ⟨Ψ, 𝒩 dΓ₁(1-Δ) Ψ⟩ / ‖w_N‖_{L^s}` over a plane-wave
/// sector with a fixed number of particles.
pub fn sobolev_ratio(potential: &ScaledPotential, modes: usize, particles: usize, s: f64) -> Result<f64> {
    if !(s > 1.0 && s <= 2.0) {
        return Err(invalid("s", "must lie in (1, 2]"));
    }
    let grid = *potential.grid();
    let plane = ModeBasis::plane_waves(grid, modes)?;
    let mut plan = SpectralPlan::new(grid);
    let abs = TorusField::from_values(grid, potential.field().values().mapv(|v| Complex64::new(v.norm(), 0.0)))?;
    let tensor = plane.interaction_tensor(&mut plan, &abs)?;
    let basis = OccupationBasis::sector(modes, particles, DENSE_CHECK_CAP)?;
    let a = dgamma2(&basis, &tensor)?.to_dense();
    let b = dgamma1(&basis, &plane.one_minus_laplacian())?.scaled(Complex64::new(particles as f64, 0.0)).to_dense();
    let lambda = max_generalized_eigenvalue(&a, &b)?;
    Ok(lambda / potential.lp_integral(s)?.powf(1.0 / s))
}

/// `M ‖[f_M², B]‖ / ‖B‖` for `B = Σ g[i,j] a†_i a†_j` on the cutoff-`M+2` basis.
pub fn cutoff_commutator_constant(g: &DMatrix<Complex64>, cutoff: usize) -> Result<f64> {
    if cutoff == 0 {
        return Err(invalid("M", "must be positive"));
    }
    let basis = OccupationBasis::truncated(g.nrows(), cutoff + 2, 4 * DENSE_CHECK_CAP)?;
    let f = smooth_cutoff(&basis, cutoff as f64)?;
    let f2 = f.compose(&f)?;
    let b = smeared_pair(&basis, g)?;
    let commutator = f2.compose(&b)?.sub(&b.compose(&f2)?)?;
    Ok(cutoff as f64 * operator_norm(&commutator.to_dense()) / operator_norm(&b.to_dense()))
}

/// `2 sup |(f²)'|` for the smooth cutoff profile, sampled on `[1/2, 1]`.
///
/// Since `B` shifts `𝒩` by two, `M ‖[f_M², B]‖ / ‖B‖` never exceeds this value.
pub fn cutoff_slope_bound() -> f64 {
    let samples = 200_000;
    let h = 0.5 / samples as f64;
    let f2 = |s: f64| smooth_cutoff_profile(s).powi(2);
    (0..samples)
        .map(|i| {
            let s = 0.5 + i as f64 * h;
            (f2(s + h) - f2(s)).abs() / h
        })
        .fold(0.0, f64::max)
        * 2.0
}

/// Smallest eigenvalue of `ℛ`, which is at least one.
pub fn weight_lower_bound(basis: &OccupationBasis, pair: &DMatrix<f64>) -> Result<f64> {
    ensure_small(basis)?;
    Ok(min_eigenvalue(&weight_operator(basis, pair)?.to_dense()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::dense::{random_hermitian, random_unitary};
    use crate::fock::SiteModel;
    use crate::interaction::PotentialProfile;
    use crate::spectral::TorusGrid;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn site_setup(count: usize) -> (DMatrix<f64>, DMatrix<Complex64>) {
        let grid = TorusGrid::new(4.0, 32).unwrap();
        let pot = ScaledPotential::new(PotentialProfile::disk_with_coupling(-5.85, 1.0), 4, 0.5, grid).unwrap();
        let sites = SiteModel::row(grid, count).unwrap();
        let w = sites.pair_matrix(pot.field()).unwrap();
        let u = sites.sample(&TorusField::gaussian(grid, 1.0, (0.0, 0.0)).normalized());
        let g = DMatrix::from_fn(count, count, |i, j| u[i] * u[j] * w[(i, j)]);
        (w, g)
    }

    #[test]
    fn weight_identities_on_sites() {
        let (w, g) = site_setup(3);
        let basis = OccupationBasis::truncated(3, 3, DENSE_CHECK_CAP).unwrap();
        let r = commutator_checks(&basis, &w, &g).unwrap();
        assert!(r.commutator_residual < 1e-10, "{r:?}");
        assert!(r.sqrt_commutator_residual < 1e-6, "{r:?}");
        assert!(r.power_margin > -1e-10, "{r:?}");
    }

    #[test]
    fn free_weight_is_identity() {
        let basis = OccupationBasis::truncated(3, 3, DENSE_CHECK_CAP).unwrap();
        let zero = DMatrix::zeros(3, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = random_hermitian(3, &mut rng);
        let g = (&g + g.transpose()) * Complex64::new(0.5, 0.0);
        let r = weight_operator(&basis, &zero).unwrap();
        assert!(max_abs_diff(&r.to_dense(), &DMatrix::identity(basis.dim(), basis.dim())) < 1e-15);
        let report = commutator_checks(&basis, &zero, &g).unwrap();
        assert!(report.commutator_residual < 1e-15);
        assert!(report.sqrt_commutator_residual < 1e-12);
        assert!(weight_lower_bound(&basis, &w_abs(&site_setup(3).0)).unwrap() > 1.0 - 1e-12);
    }

    fn w_abs(w: &DMatrix<f64>) -> DMatrix<f64> {
        w.map(f64::abs)
    }

    #[test]
    fn power_inequality_in_rotated_modes() {
        let (w, _) = site_setup(4);
        let a = w_abs(&w);
        let basis = OccupationBasis::truncated(4, 4, DENSE_CHECK_CAP).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let u = random_unitary(4, &mut rng);
        for s in [1.5, 2.0, 3.0] {
            assert!(power_inequality_margin(&basis, &a, s, None).unwrap() > -1e-10);
            assert!(power_inequality_margin(&basis, &a, s, Some(&u)).unwrap() > -1e-10);
        }
    }

    #[test]
    fn rejects_oversized_basis() {
        let basis = OccupationBasis::truncated(6, 6, 10_000).unwrap();
        let w = DMatrix::zeros(6, 6);
        assert!(power_inequality_margin(&basis, &w, 2.0, None).is_err());
    }

    #[test]
    fn sobolev_ratio_bounded_by_smallest_n() {
        let grid = TorusGrid::new(8.0, 64).unwrap();
        let ratios: Vec<f64> = [4usize, 16, 64, 256]
            .iter()
            .map(|&n| {
                let pot = ScaledPotential::new(PotentialProfile::disk_with_coupling(-5.85, 1.0), n, 0.5, grid).unwrap();
                sobolev_ratio(&pot, 9, 3, 1.5).unwrap()
            })
            .collect();
        let c = ratios[0];
        assert!(c.is_finite() && c > 0.0);
        assert!(ratios.iter().all(|&r| r <= c * (1.0 + 1e-9)), "{ratios:?}");
    }

    #[test]
    fn cutoff_commutator_gains_one_over_m() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = random_hermitian(2, &mut rng);
        let g = (&h + h.transpose()) * Complex64::new(0.5, 0.0);
        let bound = cutoff_slope_bound();
        let constants: Vec<f64> = [4usize, 8, 16].iter().map(|&m| cutoff_commutator_constant(&g, m).unwrap()).collect();
        assert!(constants.iter().all(|&c| c > 0.0 && c <= bound * (1.0 + 1e-6)), "{constants:?} vs {bound}");
        assert!(constants.windows(2).all(|w| w[0] < w[1]), "{constants:?}");
    }

    #[test]
    fn cutoff_commutator_constant_saturates() {
        let g = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
        let c64 = cutoff_commutator_constant(&g, 64).unwrap();
        let c128 = cutoff_commutator_constant(&g, 128).unwrap();
        assert!((c128 - c64).abs() < 0.05 * c128, "{c64} {c128}");
        assert!(c128 <= cutoff_slope_bound() * (1.0 + 1e-6));
    }
}
