//! Second quantization: ladder operators, `dΓ₁`, `dΓ₂`, functions of `𝒩`
//! and lifts of one-body unitaries.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::basis::{BasisKind, OccupationBasis};
use super::sparse::{SparseOperator, TripletBuilder};
use crate::error::{invalid, LabError, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const HERMITIAN_TOL: f64 = 1e-12;

/// Two-body operator on `𝔥 ⊗ 𝔥` given by matrix elements
/// `S[a, c, b, d] = ⟨e_a ⊗ e_c, S e_b ⊗ e_d⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoBodyKernel {
    modes: usize,
    data: Vec<Complex64>,
}

impl TwoBodyKernel {
    pub fn zeros(modes: usize) -> Self {
        Self {
            modes,
            data: vec![ZERO; modes.pow(4)],
        }
    }

    pub fn from_fn(modes: usize, mut f: impl FnMut(usize, usize, usize, usize) -> Complex64) -> Self {
        let mut k = Self::zeros(modes);
        for a in 0..modes {
            for c in 0..modes {
                for b in 0..modes {
                    for d in 0..modes {
                        let v = f(a, c, b, d);
                        k.set(a, c, b, d, v);
                    }
                }
            }
        }
        k
    }

    /// Multiplication operator `W(x_i, x_j)` in a product basis of sites:
    /// `S[i, j, i, j] = W[i, j]`, all other entries zero.
    pub fn multiplication(w: &DMatrix<f64>) -> Self {
        let modes = w.nrows();
        let mut k = Self::zeros(modes);
        for i in 0..modes {
            for j in 0..modes {
                k.set(i, j, i, j, Complex64::new(w[(i, j)], 0.0));
            }
        }
        k
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    fn offset(&self, a: usize, c: usize, b: usize, d: usize) -> usize {
        ((a * self.modes + c) * self.modes + b) * self.modes + d
    }

    pub fn get(&self, a: usize, c: usize, b: usize, d: usize) -> Complex64 {
        self.data[self.offset(a, c, b, d)]
    }

    pub fn set(&mut self, a: usize, c: usize, b: usize, d: usize, value: Complex64) {
        let o = self.offset(a, c, b, d);
        self.data[o] = value;
    }

    /// `max |S[a,c,b,d] - S[c,a,d,b]|`.
    pub fn exchange_residual(&self) -> f64 {
        let k = self.modes;
        let mut worst = 0.0f64;
        for a in 0..k {
            for c in 0..k {
                for b in 0..k {
                    for d in 0..k {
                        worst = worst.max((self.get(a, c, b, d) - self.get(c, a, d, b)).norm());
                    }
                }
            }
        }
        worst
    }

    /// `max |S[a,c,b,d] - conj(S[b,d,a,c])|`.
    pub fn hermiticity_residual(&self) -> f64 {
        let k = self.modes;
        let mut worst = 0.0f64;
        for a in 0..k {
            for c in 0..k {
                for b in 0..k {
                    for d in 0..k {
                        worst = worst.max((self.get(a, c, b, d) - self.get(b, d, a, c).conj()).norm());
                    }
                }
            }
        }
        worst
    }

    /// Matrix elements in the rotated modes `f_j = Σ_i U[i, j] e_i`.
    pub fn rotated(&self, u: &DMatrix<Complex64>) -> Result<TwoBodyKernel> {
        let k = self.modes;
        if u.nrows() != k || u.ncols() != k {
            return Err(LabError::Dimension {
                context: "mode rotation",
                expected: k,
                found: u.nrows(),
            });
        }
        let uc = u.map(|z| z.conj());
        // One index at a time: each pass is O(K⁵).
        let mut cur = self.data.clone();
        let mut next = vec![ZERO; cur.len()];
        for slot in 0..4 {
            let stride = k.pow(3 - slot as u32);
            let conj = slot < 2;
            for (idx, out) in next.iter_mut().enumerate() {
                let new_i = (idx / stride) % k;
                let base = idx - new_i * stride;
                let mut acc = ZERO;
                for old in 0..k {
                    let coeff = if conj { uc[(old, new_i)] } else { u[(old, new_i)] };
                    acc += coeff * cur[base + old * stride];
                }
                *out = acc;
            }
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(TwoBodyKernel { modes: k, data: cur })
    }

    /// Entries with magnitude above zero, grouped by the annihilated pair `(b, d)`.
    fn grouped(&self) -> BTreeMap<(usize, usize), Vec<(usize, usize, Complex64)>> {
        let k = self.modes;
        let mut map: BTreeMap<(usize, usize), Vec<(usize, usize, Complex64)>> = BTreeMap::new();
        for a in 0..k {
            for c in 0..k {
                for b in 0..k {
                    for d in 0..k {
                        let v = self.get(a, c, b, d);
                        if v != ZERO {
                            map.entry((b, d)).or_default().push((a, c, v));
                        }
                    }
                }
            }
        }
        map
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn scaled(&self, factor: f64) -> TwoBodyKernel {
        TwoBodyKernel {
            modes: self.modes,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }
}

fn check_modes(basis: &OccupationBasis, found: usize, context: &'static str) -> Result<()> {
    if basis.modes() == found {
        Ok(())
    } else {
        Err(LabError::Dimension {
            context,
            expected: basis.modes(),
            found,
        })
    }
}

fn require_truncated(basis: &OccupationBasis) -> Result<()> {
    match basis.kind() {
        BasisKind::Truncated { .. } => Ok(()),
        BasisKind::Sector { .. } => Err(invalid(
            "basis",
            "ladder operators change the particle number; use a truncated basis",
        )),
    }
}

/// `a_i` restricted to the basis.
pub fn annihilation(basis: &OccupationBasis, mode: usize) -> Result<SparseOperator> {
    let mut f = vec![ZERO; basis.modes()];
    if mode >= f.len() {
        return Err(invalid("mode", format!("index {mode} out of range")));
    }
    f[mode] = Complex64::new(1.0, 0.0);
    smeared_annihilation(basis, &f)
}

/// `a†_i` restricted to the basis.
pub fn creation(basis: &OccupationBasis, mode: usize) -> Result<SparseOperator> {
    Ok(annihilation(basis, mode)?.adjoint().with_hermitian_flag(false))
}

/// `a(f) = Σ_i conj(f_i) a_i`.
pub fn smeared_annihilation(basis: &OccupationBasis, f: &[Complex64]) -> Result<SparseOperator> {
    require_truncated(basis)?;
    check_modes(basis, f.len(), "smeared annihilation")?;
    let mut b = TripletBuilder::new(basis.dim());
    let mut occ = vec![0u8; basis.modes()];
    for col in 0..basis.dim() {
        occ.copy_from_slice(basis.occupation(col));
        for (i, fi) in f.iter().enumerate() {
            let n = occ[i];
            if n == 0 || *fi == ZERO {
                continue;
            }
            occ[i] -= 1;
            let row = basis.index_of(&occ).expect("lowering stays in the basis");
            b.push(row, col, fi.conj() * (n as f64).sqrt());
            occ[i] += 1;
        }
    }
    Ok(b.build(false))
}

/// `a†(f) = Σ_i f_i a†_i`, with states above the cutoff dropped.
pub fn smeared_creation(basis: &OccupationBasis, f: &[Complex64]) -> Result<SparseOperator> {
    Ok(smeared_annihilation(basis, f)?.adjoint().with_hermitian_flag(false))
}

/// `Σ_{ab} K[a, b] a†_a a†_b`, with states above the cutoff dropped.
pub fn pair_creation(basis: &OccupationBasis, k: &DMatrix<Complex64>) -> Result<SparseOperator> {
    require_truncated(basis)?;
    check_modes(basis, k.nrows(), "pair creation")?;
    let mut b = TripletBuilder::new(basis.dim());
    let mut occ = vec![0u8; basis.modes()];
    let modes = basis.modes();
    for col in 0..basis.dim() {
        if basis.total(col) + 2 > basis.max_total() {
            continue;
        }
        occ.copy_from_slice(basis.occupation(col));
        for a in 0..modes {
            for c in 0..modes {
                let v = k[(a, c)];
                if v == ZERO {
                    continue;
                }
                let amp = ((occ[c] as f64) + 1.0).sqrt();
                occ[c] += 1;
                let amp = amp * ((occ[a] as f64) + 1.0).sqrt();
                occ[a] += 1;
                let row = basis.index_of(&occ).expect("raised state is below the cutoff");
                b.push(row, col, v * amp);
                occ[a] -= 1;
                occ[c] -= 1;
            }
        }
    }
    Ok(b.build(false))
}

/// `Σ_{abd} C[a, b, d] a†_a a†_b a_d` with `C` stored as `C[(a·K + b)·K + d]`,
/// states above the cutoff dropped.
pub fn cubic_creation(basis: &OccupationBasis, c: &[Complex64]) -> Result<SparseOperator> {
    require_truncated(basis)?;
    let modes = basis.modes();
    if c.len() != modes.pow(3) {
        return Err(LabError::Dimension {
            context: "cubic coefficients",
            expected: modes.pow(3),
            found: c.len(),
        });
    }
    let mut b = TripletBuilder::new(basis.dim());
    let mut occ = vec![0u8; modes];
    for col in 0..basis.dim() {
        if basis.total(col) + 1 > basis.max_total() {
            continue;
        }
        occ.copy_from_slice(basis.occupation(col));
        for d in 0..modes {
            let nd = occ[d];
            if nd == 0 {
                continue;
            }
            occ[d] -= 1;
            for a in 0..modes {
                for bb in 0..modes {
                    let v = c[(a * modes + bb) * modes + d];
                    if v == ZERO {
                        continue;
                    }
                    let amp_b = (occ[bb] as f64 + 1.0).sqrt();
                    occ[bb] += 1;
                    let amp_a = (occ[a] as f64 + 1.0).sqrt();
                    occ[a] += 1;
                    let row = basis.index_of(&occ).expect("raised state is below the cutoff");
                    b.push(row, col, v * ((nd as f64).sqrt() * amp_b * amp_a));
                    occ[a] -= 1;
                    occ[bb] -= 1;
                }
            }
            occ[d] += 1;
        }
    }
    Ok(b.build(false))
}

/// `dΓ₁(T) = Σ_{ij} T[i, j] a†_i a_j`.
pub fn dgamma1(basis: &OccupationBasis, t: &DMatrix<Complex64>) -> Result<SparseOperator> {
    check_modes(basis, t.nrows(), "dGamma1")?;
    check_modes(basis, t.ncols(), "dGamma1")?;
    let modes = basis.modes();
    let hermitian = (0..modes).all(|i| (0..modes).all(|j| (t[(i, j)] - t[(j, i)].conj()).norm() <= HERMITIAN_TOL));
    let mut b = TripletBuilder::new(basis.dim());
    let mut occ = vec![0u8; modes];
    for col in 0..basis.dim() {
        occ.copy_from_slice(basis.occupation(col));
        for j in 0..modes {
            let nj = occ[j];
            if nj == 0 {
                continue;
            }
            occ[j] -= 1;
            for i in 0..modes {
                let v = t[(i, j)];
                if v == ZERO {
                    continue;
                }
                let amp = ((nj as f64) * (occ[i] as f64 + 1.0)).sqrt();
                occ[i] += 1;
                let row = basis.index_of(&occ).expect("number-preserving");
                b.push(row, col, v * amp);
                occ[i] -= 1;
            }
            occ[j] += 1;
        }
    }
    Ok(b.build(hermitian))
}

/// `dΓ₂(S) = ½ Σ S[a, c, b, d] a†_a a†_c a_b a_d`.
///
/// Rejects kernels that are not invariant under exchange of the two particles.
pub fn dgamma2(basis: &OccupationBasis, s: &TwoBodyKernel) -> Result<SparseOperator> {
    check_modes(basis, s.modes(), "dGamma2")?;
    let residual = s.exchange_residual();
    if residual > HERMITIAN_TOL * s.max_abs().max(1.0) {
        return Err(LabError::AsymmetricKernel { residual });
    }
    let hermitian = s.hermiticity_residual() <= HERMITIAN_TOL * s.max_abs().max(1.0);
    let groups = s.grouped();
    let modes = basis.modes();
    let mut b = TripletBuilder::new(basis.dim());
    let mut occ = vec![0u8; modes];
    for col in 0..basis.dim() {
        occ.copy_from_slice(basis.occupation(col));
        for bi in 0..modes {
            let nb = occ[bi];
            if nb == 0 {
                continue;
            }
            occ[bi] -= 1;
            for di in 0..modes {
                let nd = occ[di];
                if nd == 0 {
                    continue;
                }
                let Some(entries) = groups.get(&(bi, di)) else {
                    continue;
                };
                occ[di] -= 1;
                let lower = ((nb as f64) * (nd as f64)).sqrt();
                for &(a, c, v) in entries {
                    let amp_c = (occ[c] as f64 + 1.0).sqrt();
                    occ[c] += 1;
                    let amp_a = (occ[a] as f64 + 1.0).sqrt();
                    occ[a] += 1;
                    let row = basis.index_of(&occ).expect("number-preserving");
                    b.push(row, col, v * (0.5 * lower * amp_c * amp_a));
                    occ[a] -= 1;
                    occ[c] -= 1;
                }
                occ[di] += 1;
            }
            occ[bi] += 1;
        }
    }
    Ok(b.build(hermitian))
}

/// Diagonal operator `g(𝒩)`.
pub fn number_function(basis: &OccupationBasis, g: impl Fn(usize) -> f64) -> SparseOperator {
    let entries: Vec<f64> = (0..basis.dim()).map(|i| g(basis.total(i))).collect();
    SparseOperator::diagonal(&entries)
}

/// The number operator `𝒩`.
pub fn number(basis: &OccupationBasis) -> SparseOperator {
    number_function(basis, |n| n as f64)
}

/// `1^{≤m} = 1(𝒩 ≤ m)`.
pub fn cutoff_projector(basis: &OccupationBasis, m: usize) -> SparseOperator {
    number_function(basis, |n| if n <= m { 1.0 } else { 0.0 })
}

/// Smooth step with `f = 1` on `(-∞, 1/2]` and `f = 0` on `[1, ∞)`.
pub fn smooth_cutoff_profile(s: f64) -> f64 {
    fn psi(x: f64) -> f64 {
        if x > 0.0 {
            (-1.0 / x).exp()
        } else {
            0.0
        }
    }
    let a = psi(1.0 - s);
    let b = psi(s - 0.5);
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

/// `f_M = f(𝒩 / M)`.
pub fn smooth_cutoff(basis: &OccupationBasis, m: f64) -> Result<SparseOperator> {
    if !(m > 0.0) {
        return Err(invalid("M", "must be positive"));
    }
    Ok(number_function(basis, |n| smooth_cutoff_profile(n as f64 / m)))
}

/// Lift `Γ(A)` of a one-body matrix: `Γ(A) a†_{i₁}…a†_{i_k} Ω = a†(A e_{i₁})…a†(A e_{i_k}) Ω`.
///
/// Unitary when `A` is; preserves every particle-number sector.
pub fn lift(basis: &OccupationBasis, a: &DMatrix<Complex64>) -> Result<SparseOperator> {
    check_modes(basis, a.nrows(), "lift")?;
    let modes = basis.modes();
    let mut b = TripletBuilder::new(basis.dim());
    for col in 0..basis.dim() {
        let target = basis.occupation(col);
        let mut poly: BTreeMap<Vec<u8>, Complex64> = BTreeMap::new();
        poly.insert(vec![0u8; modes], Complex64::new(1.0, 0.0));
        let mut norm = 1.0;
        for (i, &ni) in target.iter().enumerate() {
            for rep in 0..ni {
                norm *= (rep as f64 + 1.0).sqrt();
                let mut next: BTreeMap<Vec<u8>, Complex64> = BTreeMap::new();
                for (occ, c) in &poly {
                    for j in 0..modes {
                        let v = a[(j, i)];
                        if v == ZERO {
                            continue;
                        }
                        let mut o = occ.clone();
                        let amp = (o[j] as f64 + 1.0).sqrt();
                        o[j] += 1;
                        *next.entry(o).or_insert(ZERO) += c * v * amp;
                    }
                }
                poly = next;
            }
        }
        for (occ, c) in poly {
            let row = basis.index_of(&occ).expect("number-preserving");
            b.push(row, col, c / norm);
        }
    }
    Ok(b.build(false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::basis::DEFAULT_DIMENSION_CAP;
    use crate::fock::dense::{random_hermitian, random_unitary};
    use crate::fock::sparse::max_abs_diff;
    use crate::fock::oracle::{random_two_body, TensorOracle};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn identity_gives_number_operator() {
        let basis = OccupationBasis::truncated(3, 3, DEFAULT_DIMENSION_CAP).unwrap();
        let n = dgamma1(&basis, &DMatrix::identity(3, 3)).unwrap();
        assert!(max_abs_diff(&n.to_dense(), &number(&basis).to_dense()) < 1e-15);
        assert!(n.is_hermitian());
    }

    #[test]
    fn dgamma1_matches_tensor_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (modes, particles) in [(3, 2), (2, 3), (3, 3)] {
            let basis = OccupationBasis::sector(modes, particles, DEFAULT_DIMENSION_CAP).unwrap();
            let t = random_hermitian(modes, &mut rng);
            let oracle = TensorOracle::new(&basis).unwrap();
            let diff = max_abs_diff(&dgamma1(&basis, &t).unwrap().to_dense(), &oracle.one_body(&t));
            assert!(diff < 1e-12, "{diff}");
        }
    }

    #[test]
    fn dgamma1_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let basis = OccupationBasis::truncated(3, 3, DEFAULT_DIMENSION_CAP).unwrap();
        let t = random_hermitian(3, &mut rng);
        let s = random_hermitian(3, &mut rng);
        let lhs = dgamma1(&basis, &(&t + &s)).unwrap();
        let rhs = dgamma1(&basis, &t).unwrap().add(&dgamma1(&basis, &s).unwrap()).unwrap();
        assert!(max_abs_diff(&lhs.to_dense(), &rhs.to_dense()) < 1e-13);
    }

    #[test]
    fn dgamma2_matches_tensor_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (modes, particles) in [(3, 2), (2, 3), (3, 3), (2, 4)] {
            let basis = OccupationBasis::sector(modes, particles, DEFAULT_DIMENSION_CAP).unwrap();
            let s = random_two_body(modes, &mut rng);
            let oracle = TensorOracle::new(&basis).unwrap();
            let op = dgamma2(&basis, &s).unwrap();
            assert!(op.is_hermitian());
            let diff = max_abs_diff(&op.to_dense(), &oracle.two_body(&s));
            assert!(diff < 1e-12, "{diff}");
        }
    }

    #[test]
    fn dgamma2_diagonal_three_particles() {
        let mut w = DMatrix::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                w[(i, j)] = 1.0 + (i + j) as f64 + if i == j { 0.5 } else { 0.0 };
            }
        }
        let basis = OccupationBasis::sector(3, 3, DEFAULT_DIMENSION_CAP).unwrap();
        let op = dgamma2(&basis, &TwoBodyKernel::multiplication(&w)).unwrap();
        for (i, occ) in basis.iter().enumerate() {
            let mut expected = 0.0;
            for a in 0..3 {
                for b in 0..3 {
                    let pairs = if a == b {
                        occ[a] as f64 * (occ[a] as f64 - 1.0)
                    } else {
                        occ[a] as f64 * occ[b] as f64
                    };
                    expected += 0.5 * w[(a, b)] * pairs;
                }
            }
            assert!((op.get(i, i).re - expected).abs() < 1e-13);
        }
        assert_eq!(op.nnz(), basis.dim());
    }

    #[test]
    fn dgamma2_rejects_asymmetric_and_zero_is_zero() {
        let basis = OccupationBasis::sector(2, 2, DEFAULT_DIMENSION_CAP).unwrap();
        let mut s = TwoBodyKernel::zeros(2);
        s.set(0, 1, 0, 1, c(1.0));
        assert!(matches!(dgamma2(&basis, &s), Err(LabError::AsymmetricKernel { .. })));
        assert_eq!(dgamma2(&basis, &TwoBodyKernel::zeros(2)).unwrap().nnz(), 0);
    }

    #[test]
    fn canonical_commutation_below_cutoff() {
        let basis = OccupationBasis::truncated(3, 4, DEFAULT_DIMENSION_CAP).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let a = annihilation(&basis, i).unwrap().to_dense();
                let ad = creation(&basis, j).unwrap().to_dense();
                let comm = &a * &ad - &ad * &a;
                for col in 0..basis.dim() {
                    if basis.total(col) >= basis.max_total() {
                        continue;
                    }
                    for row in 0..basis.dim() {
                        let expected = if row == col && i == j { 1.0 } else { 0.0 };
                        assert!((comm[(row, col)] - c(expected)).norm() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn second_quantized_operators_commute_with_number() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let basis = OccupationBasis::truncated(3, 3, DEFAULT_DIMENSION_CAP).unwrap();
        let n = number(&basis).to_dense();
        let d1 = dgamma1(&basis, &random_hermitian(3, &mut rng)).unwrap().to_dense();
        let d2 = dgamma2(&basis, &random_two_body(3, &mut rng)).unwrap().to_dense();
        for op in [d1, d2] {
            let comm = &op * &n - &n * &op;
            assert!(comm.iter().all(|z| z.norm() < 1e-14));
        }
    }

    #[test]
    fn pair_creation_matches_product_of_ladders() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let basis = OccupationBasis::truncated(3, 4, DEFAULT_DIMENSION_CAP).unwrap();
        let k = random_hermitian(3, &mut rng);
        let mut oracle = DMatrix::zeros(basis.dim(), basis.dim());
        for a in 0..3 {
            for b in 0..3 {
                oracle += creation(&basis, a).unwrap().to_dense() * creation(&basis, b).unwrap().to_dense() * k[(a, b)];
            }
        }
        assert!(max_abs_diff(&pair_creation(&basis, &k).unwrap().to_dense(), &oracle) < 1e-13);
    }

    #[test]
    fn cubic_matches_product_of_ladders() {
        let basis = OccupationBasis::truncated(2, 4, DEFAULT_DIMENSION_CAP).unwrap();
        let coeffs: Vec<Complex64> = (0..8).map(|i| Complex64::new(i as f64 * 0.3 - 1.0, 0.1 * i as f64)).collect();
        let mut oracle = DMatrix::zeros(basis.dim(), basis.dim());
        for a in 0..2 {
            for b in 0..2 {
                for d in 0..2 {
                    oracle += creation(&basis, a).unwrap().to_dense()
                        * creation(&basis, b).unwrap().to_dense()
                        * annihilation(&basis, d).unwrap().to_dense()
                        * coeffs[(a * 2 + b) * 2 + d];
                }
            }
        }
        assert!(max_abs_diff(&cubic_creation(&basis, &coeffs).unwrap().to_dense(), &oracle) < 1e-13);
    }

    #[test]
    fn cutoffs() {
        let sector = OccupationBasis::sector(3, 4, DEFAULT_DIMENSION_CAP).unwrap();
        let p = cutoff_projector(&sector, 4);
        assert!(max_abs_diff(&p.to_dense(), &DMatrix::identity(sector.dim(), sector.dim())) < 1e-15);
        assert_eq!(smooth_cutoff_profile(0.25), 1.0);
        assert_eq!(smooth_cutoff_profile(0.5), 1.0);
        assert_eq!(smooth_cutoff_profile(1.0), 0.0);
        let mid = smooth_cutoff_profile(0.75);
        assert!((mid - 0.5).abs() < 1e-12);
        let basis = OccupationBasis::truncated(2, 8, DEFAULT_DIMENSION_CAP).unwrap();
        let f = smooth_cutoff(&basis, 8.0).unwrap();
        for i in 0..basis.dim() {
            let v = f.get(i, i).re;
            match basis.total(i) {
                2 => assert_eq!(v, 1.0),
                8 => assert_eq!(v, 0.0),
                _ => assert!((0.0..=1.0).contains(&v)),
            }
        }
    }

    #[test]
    fn lift_is_unitary_and_intertwines() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let basis = OccupationBasis::truncated(3, 3, DEFAULT_DIMENSION_CAP).unwrap();
        let u = random_unitary(3, &mut rng);
        let g = lift(&basis, &u).unwrap().to_dense();
        let id = DMatrix::identity(basis.dim(), basis.dim());
        assert!(max_abs_diff(&(g.adjoint() * &g), &id) < 1e-13);
        // Γ(U) dΓ₁(T) Γ(U)† = dΓ₁(U T U†).
        let t = random_hermitian(3, &mut rng);
        let lhs = &g * dgamma1(&basis, &t).unwrap().to_dense() * g.adjoint();
        let rhs = dgamma1(&basis, &(&u * &t * u.adjoint())).unwrap().to_dense();
        assert!(max_abs_diff(&lhs, &rhs) < 1e-13);
        // Γ(U) a†(f) Γ(U)† = a†(U f).
        let f: Vec<Complex64> = (0..3).map(|i| Complex64::new(i as f64 - 0.7, 0.3 * i as f64)).collect();
        let uf: Vec<Complex64> = (0..3).map(|i| (0..3).map(|j| u[(i, j)] * f[j]).sum()).collect();
        let lhs = &g * smeared_creation(&basis, &f).unwrap().to_dense() * g.adjoint();
        let rhs = smeared_creation(&basis, &uf).unwrap().to_dense();
        assert!(max_abs_diff(&lhs, &rhs) < 1e-13);
    }

    #[test]
    fn rotated_kernel_matches_conjugated_dgamma2() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let basis = OccupationBasis::sector(3, 3, DEFAULT_DIMENSION_CAP).unwrap();
        let s = random_two_body(3, &mut rng);
        let u = random_unitary(3, &mut rng);
        // Modes f_j = Σ U[i,j] e_i: dΓ₂ in f-coordinates equals Γ(U†) dΓ₂(S) Γ(U).
        let g = lift(&basis, &u).unwrap().to_dense();
        let lhs = g.adjoint() * dgamma2(&basis, &s).unwrap().to_dense() * &g;
        let rhs = dgamma2(&basis, &s.rotated(&u).unwrap()).unwrap().to_dense();
        assert!(max_abs_diff(&lhs, &rhs) < 1e-12);
    }
}
