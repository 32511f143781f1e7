//! First-quantized reference: the `N`-particle sector embedded in `(C^K)^{⊗N}`,
//! where one- and two-body operators act slot by slot.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use super::basis::{BasisKind, OccupationBasis};
use super::dense::random_hermitian;
use super::ops::TwoBodyKernel;
use crate::error::{invalid, Result};

/// Largest tensor-product dimension the oracle will allocate.
pub const TENSOR_ORACLE_CAP: usize = 4096;

/// Symmetric basis vectors of a particle-number sector, as columns in the tensor product.
#[derive(Clone, Debug)]
pub struct TensorOracle {
    modes: usize,
    particles: usize,
    isometry: DMatrix<Complex64>,
}

impl TensorOracle {
    pub fn new(basis: &OccupationBasis) -> Result<Self> {
        let particles = match basis.kind() {
            BasisKind::Sector { particles } => particles,
            BasisKind::Truncated { .. } => return Err(invalid("basis", "the tensor oracle needs a particle-number sector")),
        };
        let modes = basis.modes();
        let full = (modes as u64).checked_pow(particles as u32).unwrap_or(u64::MAX);
        if full > TENSOR_ORACLE_CAP as u64 {
            return Err(invalid("basis", format!("tensor product of dimension {full} exceeds {TENSOR_ORACLE_CAP}")));
        }
        let full = full as usize;
        let mut isometry = DMatrix::zeros(full, basis.dim());
        for idx in 0..full {
            let mut occ = vec![0u8; modes];
            let mut r = idx;
            for _ in 0..particles {
                occ[r % modes] += 1;
                r /= modes;
            }
            let col = basis.index_of(&occ).expect("every tensor word has N particles");
            isometry[(idx, col)] += Complex64::new(1.0, 0.0);
        }
        for mut col in isometry.column_iter_mut() {
            let n = col.norm();
            col /= Complex64::new(n, 0.0);
        }
        Ok(Self {
            modes,
            particles,
            isometry,
        })
    }

    fn digits(&self, idx: usize) -> Vec<usize> {
        let mut r = idx;
        (0..self.particles)
            .map(|_| {
                let d = r % self.modes;
                r /= self.modes;
                d
            })
            .collect()
    }

    /// `Σ_j T_j` compressed to the symmetric subspace.
    pub fn one_body(&self, t: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let full = self.isometry.nrows();
        let mut m = DMatrix::zeros(full, full);
        for row in 0..full {
            let r = self.digits(row);
            for col in 0..full {
                let cc = self.digits(col);
                for slot in 0..self.particles {
                    if (0..self.particles).all(|s| s == slot || r[s] == cc[s]) {
                        m[(row, col)] += t[(r[slot], cc[slot])];
                    }
                }
            }
        }
        self.isometry.adjoint() * m * &self.isometry
    }

    /// `Σ_{i<j} S_{ij}` compressed to the symmetric subspace.
    pub fn two_body(&self, s: &TwoBodyKernel) -> DMatrix<Complex64> {
        let full = self.isometry.nrows();
        let mut m = DMatrix::zeros(full, full);
        for row in 0..full {
            let r = self.digits(row);
            for col in 0..full {
                let cc = self.digits(col);
                for p in 0..self.particles {
                    for q in (p + 1)..self.particles {
                        if (0..self.particles).all(|x| x == p || x == q || r[x] == cc[x]) {
                            m[(row, col)] += s.get(r[p], r[q], cc[p], cc[q]);
                        }
                    }
                }
            }
        }
        self.isometry.adjoint() * m * &self.isometry
    }
}

/// A Hermitian, exchange-symmetric two-body kernel `S = X + X^swap`.
pub fn random_two_body<R: Rng + ?Sized>(modes: usize, rng: &mut R) -> TwoBodyKernel {
    let x = random_hermitian(modes * modes, rng);
    TwoBodyKernel::from_fn(modes, |a, c, b, d| {
        x[(a * modes + c, b * modes + d)] + x[(c * modes + a, d * modes + b)]
    })
}
