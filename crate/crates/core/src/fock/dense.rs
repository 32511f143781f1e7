//! Dense Hermitian linear algebra used by oracles and small-dimension checks.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{LabError, Result};

/// Eigenvalues (ascending) and matching eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// `g(H)` for Hermitian `H`, via the spectral theorem.
pub fn hermitian_function(m: &DMatrix<Complex64>, g: impl Fn(f64) -> Complex64) -> DMatrix<Complex64> {
    let (values, vectors) = hermitian_eigen(m);
    let mut scaled = vectors.clone();
    for (j, &lambda) in values.iter().enumerate() {
        let gj = g(lambda);
        scaled.column_mut(j).iter_mut().for_each(|z| *z *= gj);
    }
    scaled * vectors.adjoint()
}

/// `e^{-iHt}` for Hermitian `H`.
pub fn expm_hermitian(h: &DMatrix<Complex64>, t: f64) -> DMatrix<Complex64> {
    hermitian_function(h, |lambda| Complex64::from_polar(1.0, -lambda * t))
}

/// `H^s` for a positive semidefinite `H`; negative round-off eigenvalues are clipped to zero.
pub fn hermitian_power(h: &DMatrix<Complex64>, s: f64) -> DMatrix<Complex64> {
    hermitian_function(h, |lambda| Complex64::new(lambda.max(0.0).powf(s), 0.0))
}

pub fn min_eigenvalue(m: &DMatrix<Complex64>) -> f64 {
    hermitian_eigen(m).0.first().copied().unwrap_or(0.0)
}

pub fn max_eigenvalue(m: &DMatrix<Complex64>) -> f64 {
    hermitian_eigen(m).0.last().copied().unwrap_or(0.0)
}

/// Trace norm `Tr|A|` of a Hermitian matrix.
pub fn trace_norm(m: &DMatrix<Complex64>) -> f64 {
    hermitian_eigen(m).0.iter().map(|v| v.abs()).sum()
}

/// Operator norm `‖A‖` of a general square matrix.
pub fn operator_norm(m: &DMatrix<Complex64>) -> f64 {
    max_eigenvalue(&(m.adjoint() * m)).max(0.0).sqrt()
}

/// Largest `λ` with `A v = λ B v` for Hermitian `A` and positive definite `B`.
pub fn max_generalized_eigenvalue(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Result<f64> {
    let chol = b
        .clone()
        .cholesky()
        .ok_or_else(|| LabError::Propagation("generalized eigenproblem: B is not positive definite".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| LabError::Propagation("singular Cholesky factor".into()))?;
    Ok(max_eigenvalue(&(&linv * a * linv.adjoint())))
}

/// Random Hermitian matrix with Gaussian entries.
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<Complex64> {
    let g = random_gaussian_matrix(n, rng);
    (&g + g.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Haar-distributed unitary from the QR decomposition of a Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<Complex64> {
    let qr = random_gaussian_matrix(n, rng).qr();
    let (q, r) = qr.unpack();
    let mut q = q;
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        q.column_mut(j).iter_mut().for_each(|z| *z *= phase);
    }
    q
}

fn random_gaussian_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<Complex64> {
    DMatrix::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im)
    })
}

/// Random unit vector in `C^n`.
pub fn random_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re, im)
        })
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= norm);
    v
}
