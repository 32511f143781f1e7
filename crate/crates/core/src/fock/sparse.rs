//! Compressed sparse row operators on occupation bases.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{LabError, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Square complex matrix in CSR layout.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<Complex64>,
    hermitian: bool,
}

/// Accumulates `(row, col, value)` entries; duplicates are summed.
#[derive(Clone, Debug, Default)]
pub struct TripletBuilder {
    dim: usize,
    entries: Vec<(usize, usize, Complex64)>,
}

impl TripletBuilder {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: Complex64) {
        debug_assert!(row < self.dim && col < self.dim);
        if value != ZERO {
            self.entries.push((row, col, value));
        }
    }

    pub fn extend(&mut self, other: TripletBuilder) {
        self.entries.extend(other.entries);
    }

    pub fn build(mut self, hermitian: bool) -> SparseOperator {
        self.entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; self.dim + 1];
        let mut indices = Vec::with_capacity(self.entries.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *values.last_mut().expect("entry exists") += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..self.dim {
            indptr[r + 1] += indptr[r];
        }
        SparseOperator {
            dim: self.dim,
            indptr,
            indices,
            values,
            hermitian,
        }
    }
}

impl SparseOperator {
    pub fn zeros(dim: usize) -> Self {
        TripletBuilder::new(dim).build(true)
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim])
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        let mut b = TripletBuilder::new(entries.len());
        for (i, &v) in entries.iter().enumerate() {
            b.push(i, i, Complex64::new(v, 0.0));
        }
        b.build(true)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Whether the operator was constructed as Hermitian.
    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        (self.indptr[r]..self.indptr[r + 1]).map(move |k| (self.indices[k], self.values[k]))
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.row(r).find(|(j, _)| *j == c).map_or(ZERO, |(_, v)| v)
    }

    pub fn apply_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = ZERO;
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            *out = acc;
        }
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![ZERO; self.dim];
        self.apply_into(x, &mut y);
        y
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn adjoint(&self) -> SparseOperator {
        let mut b = TripletBuilder::new(self.dim);
        for (r, c, v) in self.triplets() {
            b.push(c, r, v.conj());
        }
        b.build(self.hermitian)
    }

    pub fn scaled(&self, factor: Complex64) -> SparseOperator {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= factor;
        }
        out.hermitian = self.hermitian && factor.im == 0.0;
        out
    }

    pub fn add(&self, other: &SparseOperator) -> Result<SparseOperator> {
        self.check_dim(other)?;
        let mut b = TripletBuilder::new(self.dim);
        for (r, c, v) in self.triplets().chain(other.triplets()) {
            b.push(r, c, v);
        }
        Ok(b.build(self.hermitian && other.hermitian))
    }

    pub fn sub(&self, other: &SparseOperator) -> Result<SparseOperator> {
        self.add(&other.scaled(Complex64::new(-1.0, 0.0)))
    }

    /// Matrix product `self · other`.
    pub fn compose(&self, other: &SparseOperator) -> Result<SparseOperator> {
        self.check_dim(other)?;
        let mut b = TripletBuilder::new(self.dim);
        for r in 0..self.dim {
            for (k, a) in self.row(r) {
                for (c, v) in other.row(k) {
                    b.push(r, c, a * v);
                }
            }
        }
        Ok(b.build(false))
    }

    /// Multiplies rows by `left[r]` and columns by `right[c]`.
    pub fn diag_scaled(&self, left: &[f64], right: &[f64]) -> SparseOperator {
        let mut b = TripletBuilder::new(self.dim);
        for (r, c, v) in self.triplets() {
            b.push(r, c, v * left[r] * right[c]);
        }
        b.build(false)
    }

    /// `½ (A + A†)`.
    pub fn hermitian_part(&self) -> SparseOperator {
        let mut b = TripletBuilder::new(self.dim);
        for (r, c, v) in self.triplets() {
            b.push(r, c, 0.5 * v);
            b.push(c, r, 0.5 * v.conj());
        }
        b.build(true)
    }

    pub fn with_hermitian_flag(mut self, hermitian: bool) -> Self {
        self.hermitian = hermitian;
        self
    }

    /// `max |A - A†|` over all entries.
    pub fn hermiticity_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for (r, c, v) in self.triplets() {
            worst = worst.max((v - self.get(c, r).conj()).norm());
        }
        worst
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }

    pub fn from_dense(m: &DMatrix<Complex64>, hermitian: bool) -> SparseOperator {
        let mut b = TripletBuilder::new(m.nrows());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                b.push(r, c, m[(r, c)]);
            }
        }
        b.build(hermitian)
    }

    /// `max |entries|`.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    fn check_dim(&self, other: &SparseOperator) -> Result<()> {
        if self.dim == other.dim {
            Ok(())
        } else {
            Err(LabError::Dimension {
                context: "sparse operator",
                expected: self.dim,
                found: other.dim,
            })
        }
    }
}

/// `max |A - B|` between two dense matrices.
pub fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn duplicates_are_summed_and_rows_sorted() {
        let mut b = TripletBuilder::new(3);
        b.push(2, 1, c(1.0, 0.0));
        b.push(0, 2, c(0.5, 1.0));
        b.push(2, 1, c(2.0, -1.0));
        let a = b.build(false);
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(2, 1), c(3.0, -1.0));
        assert_eq!(a.apply(&[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]), vec![c(0.5, 1.0), c(0.0, 0.0), c(3.0, -1.0)]);
    }

    #[test]
    fn compose_and_adjoint_match_dense() {
        let mut b = TripletBuilder::new(3);
        b.push(0, 1, c(1.0, 2.0));
        b.push(1, 2, c(-1.0, 0.5));
        b.push(2, 0, c(0.3, 0.0));
        b.push(1, 1, c(0.0, 1.0));
        let a = b.build(false);
        let d = a.to_dense();
        assert!(max_abs_diff(&a.compose(&a).unwrap().to_dense(), &(&d * &d)) < 1e-15);
        assert!(max_abs_diff(&a.adjoint().to_dense(), &d.adjoint()) < 1e-15);
        assert!(a.hermitian_part().hermiticity_residual() < 1e-15);
        assert!(a.hermiticity_residual() > 0.1);
    }
}
