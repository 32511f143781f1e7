//! Vectors in occupation-number bases.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::basis::{BasisKind, OccupationBasis};
use super::sparse::SparseOperator;
use crate::error::{invalid, LabError, Result};

/// Amplitudes over a shared [`OccupationBasis`].
#[derive(Clone, Debug)]
pub struct FockState {
    basis: Arc<OccupationBasis>,
    amplitudes: Vec<Complex64>,
}

impl FockState {
    pub fn new(basis: Arc<OccupationBasis>, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(LabError::Dimension {
                context: "FockState amplitudes",
                expected: basis.dim(),
                found: amplitudes.len(),
            });
        }
        Ok(Self { basis, amplitudes })
    }

    pub fn zeros(basis: Arc<OccupationBasis>) -> Self {
        let dim = basis.dim();
        Self {
            basis,
            amplitudes: vec![Complex64::new(0.0, 0.0); dim],
        }
    }

    /// The vacuum `Ω`; requires a truncated basis.
    pub fn vacuum(basis: Arc<OccupationBasis>) -> Result<Self> {
        let idx = basis
            .vacuum_index()
            .ok_or_else(|| invalid("basis", "the vacuum is not part of this basis"))?;
        let mut s = Self::zeros(basis);
        s.amplitudes[idx] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    /// The basis vector with the given occupations.
    pub fn basis_vector(basis: Arc<OccupationBasis>, occupation: &[u8]) -> Result<Self> {
        let idx = basis
            .index_of(occupation)
            .ok_or_else(|| invalid("occupation", "not part of this basis"))?;
        let mut s = Self::zeros(basis);
        s.amplitudes[idx] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    /// `φ^{⊗N}` in an `N`-particle sector, with `φ` given by mode coefficients.
    pub fn product(basis: Arc<OccupationBasis>, phi: &[Complex64]) -> Result<Self> {
        let particles = match basis.kind() {
            BasisKind::Sector { particles } => particles,
            BasisKind::Truncated { .. } => return Err(invalid("basis", "product states live in a particle sector")),
        };
        if phi.len() != basis.modes() {
            return Err(LabError::Dimension {
                context: "one-body coefficients",
                expected: basis.modes(),
                found: phi.len(),
            });
        }
        let log_n_fact = log_factorial(particles);
        let amplitudes = basis
            .iter()
            .map(|occ| {
                let mut amp = Complex64::new(1.0, 0.0);
                let mut log_den = 0.0;
                for (&n, &c) in occ.iter().zip(phi) {
                    amp *= c.powu(n as u32);
                    log_den += log_factorial(n as usize);
                }
                amp * (0.5 * (log_n_fact - log_den)).exp()
            })
            .collect();
        Ok(Self { basis, amplitudes })
    }

    /// Normalized vector with independent complex Gaussian amplitudes.
    pub fn random<R: Rng + ?Sized>(basis: Arc<OccupationBasis>, rng: &mut R) -> Self {
        let amplitudes = (0..basis.dim())
            .map(|_| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                Complex64::new(re, im)
            })
            .collect();
        let mut s = Self { basis, amplitudes };
        s.normalize();
        s
    }

    pub fn basis(&self) -> &Arc<OccupationBasis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            for a in &mut self.amplitudes {
                *a /= n;
            }
        }
    }

    /// `⟨self, other⟩`, antilinear in the first argument.
    pub fn inner(&self, other: &FockState) -> Result<Complex64> {
        self.ensure_same_basis(other)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `⟨ψ, A ψ⟩`.
    pub fn expectation(&self, op: &SparseOperator) -> Result<Complex64> {
        if op.dim() != self.dim() {
            return Err(LabError::Dimension {
                context: "operator expectation",
                expected: self.dim(),
                found: op.dim(),
            });
        }
        let av = op.apply(&self.amplitudes);
        Ok(self.amplitudes.iter().zip(&av).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn apply(&self, op: &SparseOperator) -> Result<FockState> {
        if op.dim() != self.dim() {
            return Err(LabError::Dimension {
                context: "operator application",
                expected: self.dim(),
                found: op.dim(),
            });
        }
        Ok(Self {
            basis: self.basis.clone(),
            amplitudes: op.apply(&self.amplitudes),
        })
    }

    /// Expected particle number `⟨𝒩⟩`.
    pub fn number_expectation(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| a.norm_sqr() * self.basis.total(i) as f64)
            .sum()
    }

    /// Probability weight of the states with exactly `k` particles.
    pub fn shell_weight(&self, k: usize) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| self.basis.total(*i) == k)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Copies amplitudes into `target` by occupation key.
    ///
    /// Fails if a nonzero amplitude has no counterpart in the target basis.
    pub fn embed_into(&self, target: Arc<OccupationBasis>) -> Result<FockState> {
        if target.modes() != self.basis.modes() {
            return Err(LabError::Incompatible(format!(
                "cannot embed {} modes into {} modes",
                self.basis.modes(),
                target.modes()
            )));
        }
        let mut out = Self::zeros(target);
        for (i, a) in self.amplitudes.iter().enumerate() {
            match out.basis.index_of(self.basis.occupation(i)) {
                Some(j) => out.amplitudes[j] = *a,
                None if *a == Complex64::new(0.0, 0.0) => {}
                None => {
                    return Err(LabError::Incompatible(
                        "state has weight outside the target basis".to_string(),
                    ))
                }
            }
        }
        Ok(out)
    }

    /// Restriction to the states with at most `m` particles (`1^{≤m} ψ`).
    pub fn project_number(&self, m: usize) -> FockState {
        let mut out = self.clone();
        for (i, a) in out.amplitudes.iter_mut().enumerate() {
            if self.basis.total(i) > m {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        out
    }

    pub fn distance(&self, other: &FockState) -> Result<f64> {
        self.ensure_same_basis(other)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    fn ensure_same_basis(&self, other: &FockState) -> Result<()> {
        if Arc::ptr_eq(&self.basis, &other.basis)
            || (self.basis.kind() == other.basis.kind() && self.basis.modes() == other.basis.modes())
        {
            Ok(())
        } else {
            Err(LabError::Incompatible("states live in different bases".to_string()))
        }
    }
}

pub(crate) fn log_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}
