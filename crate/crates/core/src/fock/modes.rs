//! One-body mode bases on the torus: plane waves and lattice sites.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::ops::TwoBodyKernel;
use crate::error::{invalid, Result};
use crate::spectral::{SpectralPlan, TorusField, TorusGrid};

/// `K` torus plane waves `e^{ik·x}/L`, ordered by `|k|²` and then
/// lexicographically by the integer frequency `(k_x, k_y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeBasis {
    grid: TorusGrid,
    frequencies: Vec<(i64, i64)>,
}

impl ModeBasis {
    pub fn plane_waves(grid: TorusGrid, modes: usize) -> Result<Self> {
        if modes == 0 {
            return Err(invalid("K", "at least one mode is required"));
        }
        let mut radius = 1i64;
        let frequencies = loop {
            let mut cands: Vec<(i64, i64)> = (-radius..=radius)
                .flat_map(|x| (-radius..=radius).map(move |y| (x, y)))
                .collect();
            cands.sort_by_key(|&(x, y)| (x * x + y * y, x, y));
            if cands.len() >= modes {
                let cutoff = cands[modes - 1];
                let r2 = cutoff.0 * cutoff.0 + cutoff.1 * cutoff.1;
                if r2 < radius * radius {
                    cands.truncate(modes);
                    break cands;
                }
            }
            radius += 1;
        };
        let max = frequencies.iter().map(|&(x, y)| x.abs().max(y.abs())).max().unwrap_or(0);
        if 4 * max >= grid.points() as i64 {
            return Err(invalid(
                "K",
                format!("frequency {max} aliases on a grid with {} points", grid.points()),
            ));
        }
        Ok(Self { grid, frequencies })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn frequencies(&self) -> &[(i64, i64)] {
        &self.frequencies
    }

    pub fn wavevector(&self, i: usize) -> (f64, f64) {
        let s = 2.0 * PI / self.grid.length();
        let (x, y) = self.frequencies[i];
        (s * x as f64, s * y as f64)
    }

    /// `-Δ` in this basis: `diag |k|²`.
    pub fn kinetic(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.len(), self.len(), |i, j| {
            if i == j {
                let (kx, ky) = self.wavevector(i);
                Complex64::new(kx * kx + ky * ky, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// `1 - Δ` in this basis.
    pub fn one_minus_laplacian(&self) -> DMatrix<Complex64> {
        self.kinetic() + DMatrix::identity(self.len(), self.len())
    }

    pub fn field(&self, i: usize) -> TorusField {
        TorusField::plane_wave(self.grid, self.frequencies[i])
    }

    pub fn fields(&self) -> Vec<TorusField> {
        (0..self.len()).map(|i| self.field(i)).collect()
    }

    /// `max |⟨e_i, e_j⟩ - δ_ij|` under grid quadrature.
    pub fn gram_residual(&self) -> Result<f64> {
        let fields = self.fields();
        let mut worst = 0.0f64;
        for (i, fi) in fields.iter().enumerate() {
            for (j, fj) in fields.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((fi.inner(fj)? - target).norm());
            }
        }
        Ok(worst)
    }

    /// Coefficients `⟨e_i, f⟩` of the orthogonal projection onto the span.
    pub fn project(&self, f: &TorusField) -> Result<Vec<Complex64>> {
        (0..self.len()).map(|i| self.field(i).inner(f)).collect()
    }

    pub fn synthesize(&self, coefficients: &[Complex64]) -> TorusField {
        let mut out = TorusField::zeros(self.grid);
        for (i, c) in coefficients.iter().enumerate() {
            let e = self.field(i);
            out.values_mut().zip_mut_with(e.values(), |o, v| *o += c * v);
        }
        out
    }

    /// `V[a, c, b, d] = ⟨e_a ⊗ e_c, w(x - y) e_b ⊗ e_d⟩` for a sampled even kernel,
    /// using momentum conservation and the grid spectrum of `w`.
    pub fn interaction_tensor(&self, plan: &mut SpectralPlan, kernel: &TorusField) -> Result<TwoBodyKernel> {
        self.grid.ensure_same(plan.grid())?;
        let spectrum = plan.kernel_spectrum(kernel)?;
        let area = self.grid.length() * self.grid.length();
        let k = self.len();
        let f = &self.frequencies;
        let mut tensor = TwoBodyKernel::zeros(k);
        for a in 0..k {
            for c in 0..k {
                for b in 0..k {
                    for d in 0..k {
                        if f[a].0 + f[c].0 != f[b].0 + f[d].0 || f[a].1 + f[c].1 != f[b].1 + f[d].1 {
                            continue;
                        }
                        let qx = self.grid.frequency_index(f[a].0 - f[b].0);
                        let qy = self.grid.frequency_index(f[a].1 - f[b].1);
                        tensor.set(a, c, b, d, spectrum[[qx, qy]] / area);
                    }
                }
            }
        }
        Ok(tensor)
    }
}

/// Lattice cells of a torus grid used as one-body modes, so that
/// multiplication operators are diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteModel {
    grid: TorusGrid,
    sites: Vec<(usize, usize)>,
}

impl SiteModel {
    pub fn new(grid: TorusGrid, sites: Vec<(usize, usize)>) -> Result<Self> {
        let n = grid.points();
        if sites.is_empty() || sites.iter().any(|&(i, j)| i >= n || j >= n) {
            return Err(invalid("sites", "sites must be nonempty grid indices"));
        }
        Ok(Self { grid, sites })
    }

    /// `count` consecutive cells along the first axis, starting at the origin.
    pub fn row(grid: TorusGrid, count: usize) -> Result<Self> {
        let n = grid.points();
        let half = n / 2;
        Self::new(grid, (0..count).map(|j| ((half + j) % n, half)).collect())
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Values `u(x_i)` of a field at the sites.
    pub fn sample(&self, f: &TorusField) -> Vec<Complex64> {
        self.sites.iter().map(|&(i, j)| f.values()[[i, j]]).collect()
    }

    /// `W[i, j] = w(x_i - x_j)` for a centered kernel sample, periodically wrapped.
    pub fn pair_matrix(&self, kernel: &TorusField) -> Result<DMatrix<f64>> {
        self.grid.ensure_same(kernel.grid())?;
        let n = self.grid.points() as i64;
        let half = n / 2;
        let vals = kernel.values();
        Ok(DMatrix::from_fn(self.len(), self.len(), |a, b| {
            let (ia, ja) = self.sites[a];
            let (ib, jb) = self.sites[b];
            let di = (half + ia as i64 - ib as i64).rem_euclid(n) as usize;
            let dj = (half + ja as i64 - jb as i64).rem_euclid(n) as usize;
            vals[[di, dj]].re
        }))
    }
}
