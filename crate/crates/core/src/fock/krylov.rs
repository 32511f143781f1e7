//! Lanczos propagation `ψ ↦ e^{-iA·dt} ψ` and extremal eigenvalues for
//! Hermitian sparse operators.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::sparse::SparseOperator;
use super::state::FockState;
use crate::error::{invalid, LabError, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Settings for [`krylov_propagate`].
#[derive(Clone, Copy, Debug)]
pub struct KrylovOptions {
    /// Maximal Krylov subspace dimension per substep.
    pub dimension: usize,
    /// Bound on the estimated error of the whole step.
    pub tolerance: f64,
    /// Smallest admissible substep as a fraction of `dt`.
    pub min_fraction: f64,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self {
            dimension: 30,
            tolerance: 1e-12,
            min_fraction: 1e-10,
        }
    }
}

/// Result of one propagation step.
#[derive(Clone, Debug)]
pub struct KrylovOutcome {
    pub state: FockState,
    /// Number of Krylov substeps taken.
    pub substeps: usize,
    /// Accumulated a-posteriori error estimate.
    pub error_estimate: f64,
    /// True if the Krylov space became invariant; the result is then exact.
    pub breakdown: bool,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

struct Lanczos {
    vectors: Vec<Vec<Complex64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    /// `β_m`, the coupling to the first discarded direction.
    residual: f64,
    breakdown: bool,
}

/// Lanczos with full reorthogonalization started from the unit vector `v0`.
fn lanczos(a: &SparseOperator, v0: Vec<Complex64>, max_dim: usize) -> Lanczos {
    let dim = v0.len();
    let max_dim = max_dim.min(dim).max(1);
    let mut vectors = vec![v0];
    let mut alpha = Vec::with_capacity(max_dim);
    let mut beta = Vec::with_capacity(max_dim);
    let mut w = vec![ZERO; dim];
    let mut scale = 0.0f64;
    loop {
        let j = vectors.len() - 1;
        a.apply_into(&vectors[j], &mut w);
        let aj = dot(&vectors[j], &w).re;
        alpha.push(aj);
        for _ in 0..2 {
            for v in &vectors {
                let proj = dot(v, &w);
                w.iter_mut().zip(v).for_each(|(x, y)| *x -= proj * y);
            }
        }
        let bj = norm(&w);
        scale = scale.max(aj.abs()).max(bj);
        if bj <= 1e-14 * scale.max(1e-300) {
            return Lanczos {
                vectors,
                alpha,
                beta,
                residual: 0.0,
                breakdown: true,
            };
        }
        if vectors.len() == max_dim {
            return Lanczos {
                vectors,
                alpha,
                beta,
                residual: bj,
                breakdown: false,
            };
        }
        beta.push(bj);
        vectors.push(w.iter().map(|x| x / bj).collect());
    }
}

fn tridiagonal(alpha: &[f64], beta: &[f64]) -> SymmetricEigen<f64, nalgebra::Dyn> {
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    SymmetricEigen::new(t)
}

/// `e^{-iT s} e₁` from the eigendecomposition of the tridiagonal `T`.
fn small_propagator(eig: &SymmetricEigen<f64, nalgebra::Dyn>, s: f64) -> Vec<Complex64> {
    let m = eig.eigenvalues.len();
    (0..m)
        .map(|i| {
            (0..m)
                .map(|k| {
                    let q = eig.eigenvectors[(i, k)] * eig.eigenvectors[(0, k)];
                    Complex64::from_polar(q, -eig.eigenvalues[k] * s)
                })
                .sum()
        })
        .collect()
}

/// Lanczos approximation of `e^{-iA·dt} ψ`.
///
/// The step is subdivided until each substep's estimate `β_m |(e^{-iT s} e₁)_m|`
/// stays within its share of `tolerance`.
pub fn krylov_propagate(a: &SparseOperator, psi: &FockState, dt: f64, options: &KrylovOptions) -> Result<KrylovOutcome> {
    if !(options.tolerance > 0.0) {
        return Err(invalid("tol", "must be positive"));
    }
    if a.dim() != psi.dim() {
        return Err(LabError::Dimension {
            context: "Krylov propagation",
            expected: psi.dim(),
            found: a.dim(),
        });
    }
    let mut state = psi.clone();
    let total = dt.abs();
    let mut remaining = dt;
    let mut substeps = 0;
    let mut error = 0.0;
    let mut breakdown = false;
    while remaining != 0.0 {
        let nrm = state.norm();
        if nrm == 0.0 {
            break;
        }
        let v0: Vec<Complex64> = state.amplitudes().iter().map(|x| x / nrm).collect();
        let lz = lanczos(a, v0, options.dimension);
        let eig = tridiagonal(&lz.alpha, &lz.beta);
        let m = lz.alpha.len();
        let mut s = remaining;
        let coeffs = if lz.breakdown {
            breakdown = true;
            small_propagator(&eig, s)
        } else {
            loop {
                let c = small_propagator(&eig, s);
                let estimate = lz.residual * c[m - 1].norm() * nrm;
                if estimate <= options.tolerance * s.abs() / total {
                    error += estimate;
                    break c;
                }
                s *= 0.5;
                if s.abs() < options.min_fraction * total {
                    return Err(LabError::Propagation(format!(
                        "Krylov substep fell below {:e} of the step",
                        options.min_fraction
                    )));
                }
            }
        };
        let amps = state.amplitudes_mut();
        amps.iter_mut().for_each(|x| *x = ZERO);
        for (c, v) in coeffs.iter().zip(&lz.vectors) {
            let c = c * nrm;
            amps.iter_mut().zip(v).for_each(|(x, y)| *x += c * y);
        }
        remaining -= s;
        if remaining.abs() <= 1e-15 * total {
            remaining = 0.0;
        }
        substeps += 1;
    }
    Ok(KrylovOutcome {
        state,
        substeps,
        error_estimate: error,
        breakdown,
    })
}

/// Smallest eigenvalue of a Hermitian operator by Lanczos with full
/// reorthogonalization, iterated until the Ritz residual drops below `tol`.
pub fn lanczos_min_eigenvalue(a: &SparseOperator, tol: f64) -> Result<f64> {
    let dim = a.dim();
    if dim == 0 {
        return Err(invalid("dim", "empty operator"));
    }
    // Deterministic start vector with weight on every basis state.
    let mut v: Vec<Complex64> = (0..dim)
        .map(|i| Complex64::new(1.0 + ((i * 7919) % 97) as f64 / 97.0, ((i * 104729) % 89) as f64 / 89.0))
        .collect();
    let mut max_dim = 60.min(dim);
    loop {
        let n = norm(&v);
        v.iter_mut().for_each(|x| *x /= n);
        let lz = lanczos(a, v.clone(), max_dim);
        let eig = tridiagonal(&lz.alpha, &lz.beta);
        let (k, &lambda) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty spectrum");
        let m = lz.alpha.len();
        let ritz_residual = lz.residual * eig.eigenvectors[(m - 1, k)].abs();
        if lz.breakdown || ritz_residual <= tol || m == dim {
            return Ok(lambda);
        }
        // Restart from the current Ritz vector.
        let mut next = vec![ZERO; dim];
        for (i, vec) in lz.vectors.iter().enumerate() {
            let c = eig.eigenvectors[(i, k)];
            next.iter_mut().zip(vec).for_each(|(x, y)| *x += c * y);
        }
        v = next;
        max_dim = (max_dim * 2).min(dim).min(400);
    }
}
