//! Periodic 2D grids, spectral calculus and FFT convolution.
//!
//! The plane is truncated to a torus of side `L` sampled on `n × n` points.
//! Sample `(i, j)` sits at `(-L/2 + i h, -L/2 + j h)` with `h = L / n`, so
//! index `n/2` is the origin. All integrals carry the measure weight `h²`,
//! which keeps every norm comparable with its continuum counterpart.
//!
//! Frequencies follow the usual FFT order: index `p < n/2` is frequency `p`,
//! index `p >= n/2` is `p - n`. The Nyquist index `n/2` is therefore the
//! negative frequency `-n/2`.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};

/// A periodic square grid of side `length` with `points` samples per axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusGrid {
    length: f64,
    points: usize,
}

impl TorusGrid {
    pub fn new(length: f64, points: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(invalid("L", "side length must be positive"));
        }
        if points == 0 || points % 2 != 0 {
            return Err(invalid("n", "points per dimension must be even and positive"));
        }
        Ok(Self { length, points })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.points as f64
    }

    /// Cell area `h²`, the quadrature weight of every sample.
    pub fn cell_area(&self) -> f64 {
        let h = self.spacing();
        h * h
    }

    /// Coordinate of sample index `i` along either axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        (i as f64 - (self.points / 2) as f64) * self.spacing()
    }

    /// Signed integer frequency of FFT index `p`.
    pub fn frequency(&self, p: usize) -> i64 {
        let n = self.points as i64;
        let p = p as i64;
        if p < n / 2 {
            p
        } else {
            p - n
        }
    }

    /// FFT index of a signed integer frequency (taken modulo `n`).
    pub fn frequency_index(&self, freq: i64) -> usize {
        freq.rem_euclid(self.points as i64) as usize
    }

    pub fn wavenumber(&self, p: usize) -> f64 {
        2.0 * PI * self.frequency(p) as f64 / self.length
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.points).map(|p| self.wavenumber(p)).collect()
    }

    pub fn ensure_same(&self, other: &TorusGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(LabError::GridMismatch {
                expected_len: self.length,
                expected_n: self.points,
                found_len: other.length,
                found_n: other.points,
            })
        }
    }
}

/// Complex samples of a function on a [`TorusGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct TorusField {
    grid: TorusGrid,
    values: Array2<Complex64>,
}

impl TorusField {
    pub fn zeros(grid: TorusGrid) -> Self {
        let n = grid.points();
        Self {
            grid,
            values: Array2::zeros((n, n)),
        }
    }

    pub fn from_values(grid: TorusGrid, values: Array2<Complex64>) -> Result<Self> {
        let n = grid.points();
        if values.dim() != (n, n) {
            return Err(LabError::Dimension {
                context: "TorusField values",
                expected: n * n,
                found: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(x, y)` at every grid point.
    pub fn from_fn(grid: TorusGrid, mut f: impl FnMut(f64, f64) -> Complex64) -> Self {
        let n = grid.points();
        let values = Array2::from_shape_fn((n, n), |(i, j)| f(grid.coordinate(i), grid.coordinate(j)));
        Self { grid, values }
    }

    /// Unit-mass Gaussian `exp(-|x - c|²/(2σ²)) / (√π σ)` centered at `center`.
    pub fn gaussian(grid: TorusGrid, width: f64, center: (f64, f64)) -> Self {
        let norm = 1.0 / (PI.sqrt() * width);
        Self::from_fn(grid, |x, y| {
            let r2 = (x - center.0).powi(2) + (y - center.1).powi(2);
            Complex64::new(norm * (-r2 / (2.0 * width * width)).exp(), 0.0)
        })
    }

    /// Plane wave `exp(i k·x) / L` for integer frequencies, unit mass on the torus.
    pub fn plane_wave(grid: TorusGrid, freq: (i64, i64)) -> Self {
        let kx = 2.0 * PI * freq.0 as f64 / grid.length();
        let ky = 2.0 * PI * freq.1 as f64 / grid.length();
        let amp = 1.0 / grid.length();
        Self::from_fn(grid, |x, y| Complex64::from_polar(amp, kx * x + ky * y))
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &Array2<Complex64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array2<Complex64> {
        &mut self.values
    }

    pub fn into_values(self) -> Array2<Complex64> {
        self.values
    }

    /// `∫ conj(self) · other`.
    pub fn inner(&self, other: &TorusField) -> Result<Complex64> {
        self.grid.ensure_same(&other.grid)?;
        let sum: Complex64 = self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(sum * self.grid.cell_area())
    }

    /// `∫ |f|²`.
    pub fn mass(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_area()
    }

    /// `∫ |f|^p` (no root taken).
    pub fn lp(&self, p: f64) -> f64 {
        let sum: f64 = if p == 2.0 {
            self.values.iter().map(|v| v.norm_sqr()).sum()
        } else if p == 4.0 {
            self.values.iter().map(|v| v.norm_sqr() * v.norm_sqr()).sum()
        } else {
            self.values.iter().map(|v| v.norm().powf(p)).sum()
        };
        sum * self.grid.cell_area()
    }

    /// `∫ f` (plain quadrature).
    pub fn integral(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() * self.grid.cell_area()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn scale(&mut self, factor: Complex64) {
        self.values.mapv_inplace(|v| v * factor);
    }

    pub fn normalized(mut self) -> Self {
        let m = self.mass();
        if m > 0.0 {
            self.scale(Complex64::new(1.0 / m.sqrt(), 0.0));
        }
        self
    }

    /// `self - other`, grids must agree.
    pub fn difference(&self, other: &TorusField) -> Result<TorusField> {
        self.grid.ensure_same(&other.grid)?;
        Ok(TorusField {
            grid: self.grid,
            values: &self.values - &other.values,
        })
    }

    pub fn density(&self) -> TorusField {
        TorusField {
            grid: self.grid,
            values: self.values.mapv(|v| Complex64::new(v.norm_sqr(), 0.0)),
        }
    }

    /// Largest modulus on the outermost ring of samples relative to the peak.
    pub fn boundary_ratio(&self) -> f64 {
        let n = self.grid.points();
        let peak = self.sup_norm();
        if peak == 0.0 {
            return 0.0;
        }
        let mut edge = 0.0f64;
        for k in 0..n {
            for v in [
                self.values[[0, k]],
                self.values[[n - 1, k]],
                self.values[[k, 0]],
                self.values[[k, n - 1]],
            ] {
                edge = edge.max(v.norm());
            }
        }
        edge / peak
    }

    /// Writes `<stem>.bin` (row-major little-endian `re, im` pairs) and `<stem>.json` (`L`, `n`).
    pub fn save(&self, stem: &Path) -> Result<()> {
        let (bin, json) = sidecar_paths(stem);
        let mut out = BufWriter::new(File::create(&bin)?);
        for v in self.values.iter() {
            out.write_all(&v.re.to_le_bytes())?;
            out.write_all(&v.im.to_le_bytes())?;
        }
        out.flush()?;
        let header = FieldHeader {
            format: "torus-field-v1".into(),
            length: self.grid.length(),
            points: self.grid.points(),
        };
        std::fs::write(json, serde_json::to_string_pretty(&header)?)?;
        Ok(())
    }

    pub fn load(stem: &Path) -> Result<Self> {
        let (bin, json) = sidecar_paths(stem);
        let header: FieldHeader = serde_json::from_str(&std::fs::read_to_string(&json)?)?;
        let grid = TorusGrid::new(header.length, header.points)?;
        let n = grid.points();
        let mut bytes = Vec::with_capacity(16 * n * n);
        BufReader::new(File::open(&bin)?).read_to_end(&mut bytes)?;
        if bytes.len() != 16 * n * n {
            return Err(LabError::Format {
                path: bin,
                reason: format!("expected {} bytes, found {}", 16 * n * n, bytes.len()),
            });
        }
        let mut values = Vec::with_capacity(n * n);
        for chunk in bytes.chunks_exact(16) {
            let re = f64::from_le_bytes(chunk[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(chunk[8..].try_into().expect("8 bytes"));
            values.push(Complex64::new(re, im));
        }
        let values = Array2::from_shape_vec((n, n), values).expect("shape checked above");
        Ok(Self { grid, values })
    }

    /// CSV of `|f|²` along the row through the origin (`x, density`).
    pub fn write_density_slice_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let n = self.grid.points();
        let row = n / 2;
        writeln!(out, "x,density")?;
        for i in 0..n {
            writeln!(out, "{:.12e},{:.12e}", self.grid.coordinate(i), self.values[[i, row]].norm_sqr())?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct FieldHeader {
    format: String,
    #[serde(rename = "L")]
    length: f64,
    #[serde(rename = "n")]
    points: usize,
}

fn sidecar_paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("bin"), stem.with_extension("json"))
}

/// Norms of a field in continuum normalization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Norms {
    /// `∫ |f|²`
    pub mass: f64,
    /// `∫ |∇f|²`
    pub kinetic: f64,
    /// Squared `H¹` norm, `mass + kinetic`.
    pub h1: f64,
}

/// Cached FFT workspace for one grid. Not meant to be shared between threads.
pub struct SpectralPlan {
    grid: TorusGrid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    transpose: Vec<Complex64>,
    k2: Array2<f64>,
    free_cache: Option<(u64, Array2<Complex64>)>,
}

impl SpectralPlan {
    pub fn new(grid: TorusGrid) -> Self {
        let n = grid.points();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        let k = grid.wavenumbers();
        let k2 = Array2::from_shape_fn((n, n), |(p, q)| k[p] * k[p] + k[q] * k[q]);
        Self {
            grid,
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            transpose: vec![Complex64::new(0.0, 0.0); n * n],
            k2,
            free_cache: None,
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    /// `|k|²` on the FFT index lattice.
    pub fn k_squared(&self) -> &Array2<f64> {
        &self.k2
    }

    fn transform(&mut self, data: &mut Array2<Complex64>, forward: bool) {
        let n = self.grid.points();
        let fft = if forward { &self.forward } else { &self.inverse };
        let slice = data.as_slice_mut().expect("fields are stored contiguously");
        fft.process_with_scratch(slice, &mut self.scratch);
        transpose_into(slice, &mut self.transpose, n);
        fft.process_with_scratch(&mut self.transpose, &mut self.scratch);
        transpose_into(&self.transpose, slice, n);
    }

    /// Unnormalized forward DFT of the samples.
    pub fn forward(&mut self, field: &TorusField) -> Result<Array2<Complex64>> {
        self.grid.ensure_same(field.grid())?;
        let mut data = field.values().to_owned();
        self.transform(&mut data, true);
        Ok(data)
    }

    pub fn forward_in_place(&mut self, data: &mut Array2<Complex64>) {
        self.transform(data, true);
    }

    /// Inverse DFT including the `1/n²` normalization.
    pub fn inverse_in_place(&mut self, data: &mut Array2<Complex64>) {
        self.transform(data, false);
        let scale = 1.0 / (self.grid.points() * self.grid.points()) as f64;
        data.mapv_inplace(|v| v * scale);
    }

    pub fn inverse(&mut self, spectrum: Array2<Complex64>) -> TorusField {
        let mut data = spectrum;
        self.inverse_in_place(&mut data);
        TorusField {
            grid: self.grid,
            values: data,
        }
    }

    /// `-Δf`, computed by multiplying with `|k|²` in frequency space.
    pub fn neg_laplacian(&mut self, f: &TorusField) -> Result<TorusField> {
        let mut hat = self.forward(f)?;
        hat.zip_mut_with(&self.k2, |s, k2| *s *= *k2);
        Ok(self.inverse(hat))
    }

    /// Multiplies the spectrum by `exp(-i |k|² dt)`: exact free evolution over `dt`.
    pub fn free_evolve(&mut self, f: &mut TorusField, dt: f64) -> Result<()> {
        self.grid.ensure_same(f.grid())?;
        let key = dt.to_bits();
        if self.free_cache.as_ref().map(|(k, _)| *k) != Some(key) {
            let scale = 1.0 / (self.grid.points() * self.grid.points()) as f64;
            let propagator = self.k2.mapv(|k2| Complex64::from_polar(scale, -k2 * dt));
            self.free_cache = Some((key, propagator));
        }
        self.transform(&mut f.values, true);
        let (_, propagator) = self.free_cache.as_ref().expect("filled above");
        f.values.zip_mut_with(propagator, |s, p| *s *= p);
        self.transform(&mut f.values, false);
        Ok(())
    }

    /// `∫ |∇f|²` from the spectrum (Parseval).
    pub fn kinetic(&mut self, f: &TorusField) -> Result<f64> {
        let hat = self.forward(f)?;
        Ok(self.spectral_sum(&hat, |k2| k2))
    }

    /// `Σ weight(|k|²) |f̂|²` in continuum normalization (`L²/n⁴` prefactor).
    pub fn spectral_sum(&self, spectrum: &Array2<Complex64>, weight: impl Fn(f64) -> f64) -> f64 {
        let n = self.grid.points() as f64;
        let pref = self.grid.length().powi(2) / (n * n * n * n);
        spectrum
            .iter()
            .zip(self.k2.iter())
            .map(|(s, &k2)| weight(k2) * s.norm_sqr())
            .sum::<f64>()
            * pref
    }

    pub fn norms(&mut self, f: &TorusField) -> Result<Norms> {
        let mass = f.mass();
        let kinetic = self.kinetic(f)?;
        Ok(Norms {
            mass,
            kinetic,
            h1: mass + kinetic,
        })
    }

    /// Fraction of `Σ|f̂|²` carried by modes with `max(|p|,|q|) > fraction · n/2`.
    pub fn tail_fraction(&mut self, f: &TorusField, fraction: f64) -> Result<f64> {
        Ok(self.diagnostics(f, fraction)?.1)
    }

    /// Norms and tail fraction from a single transform.
    pub fn diagnostics(&mut self, f: &TorusField, fraction: f64) -> Result<(Norms, f64)> {
        let hat = self.forward(f)?;
        let n = self.grid.points();
        let cutoff = fraction * (n / 2) as f64;
        let mut total = 0.0;
        let mut tail = 0.0;
        for ((p, q), s) in hat.indexed_iter() {
            let w = s.norm_sqr();
            total += w;
            let fp = self.grid.frequency(p).unsigned_abs() as f64;
            let fq = self.grid.frequency(q).unsigned_abs() as f64;
            if fp.max(fq) > cutoff {
                tail += w;
            }
        }
        let kinetic = self.spectral_sum(&hat, |k2| k2);
        let mass = f.mass();
        let norms = Norms {
            mass,
            kinetic,
            h1: mass + kinetic,
        };
        Ok((norms, if total > 0.0 { tail / total } else { 0.0 }))
    }

    /// Periodic convolution `∫ kernel(x - y) density(y) dy` with weight `h²`.
    ///
    /// Both inputs use the centered sample layout; the kernel's origin is the
    /// sample at index `(n/2, n/2)`.
    pub fn convolve(&mut self, kernel: &TorusField, density: &TorusField) -> Result<TorusField> {
        self.grid.ensure_same(kernel.grid())?;
        self.grid.ensure_same(density.grid())?;
        let kernel_hat = self.kernel_spectrum(kernel)?;
        self.convolve_with_spectrum(&kernel_hat, density)
    }

    /// Spectrum of a kernel re-centered so that its origin sits at index `(0, 0)`,
    /// including the `h²` quadrature weight.
    pub fn kernel_spectrum(&mut self, kernel: &TorusField) -> Result<Array2<Complex64>> {
        self.grid.ensure_same(kernel.grid())?;
        let n = self.grid.points();
        let half = n / 2;
        let h2 = self.grid.cell_area();
        let vals = kernel.values();
        let mut shifted = Array2::from_shape_fn((n, n), |(i, j)| vals[[(i + half) % n, (j + half) % n]] * h2);
        self.transform(&mut shifted, true);
        Ok(shifted)
    }

    pub fn convolve_with_spectrum(
        &mut self,
        kernel_hat: &Array2<Complex64>,
        density: &TorusField,
    ) -> Result<TorusField> {
        self.grid.ensure_same(density.grid())?;
        let mut data = density.values().to_owned();
        self.transform(&mut data, true);
        data.zip_mut_with(kernel_hat, |d, k| *d *= *k);
        self.inverse_in_place(&mut data);
        Ok(TorusField {
            grid: self.grid,
            values: data,
        })
    }
}

/// Cache-blocked transpose of a row-major `n × n` matrix.
fn transpose_into(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    const BLOCK: usize = 32;
    for ib in (0..n).step_by(BLOCK) {
        for jb in (0..n).step_by(BLOCK) {
            for i in ib..(ib + BLOCK).min(n) {
                for j in jb..(jb + BLOCK).min(n) {
                    dst[j * n + i] = src[i * n + j];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: TorusGrid, seed: u64) -> TorusField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        TorusField::from_fn(grid, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    /// Smooth random field: a few low plane waves with random amplitudes.
    fn smooth_field(grid: TorusGrid, seed: u64) -> TorusField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = TorusField::zeros(grid);
        for fx in -3i64..=3 {
            for fy in -3i64..=3 {
                let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                let wave = TorusField::plane_wave(grid, (fx, fy));
                f.values_mut().zip_mut_with(wave.values(), |a, b| *a += c * b);
            }
        }
        f
    }

    #[test]
    fn grid_rejects_odd_points() {
        assert!(TorusGrid::new(1.0, 7).is_err());
        assert!(TorusGrid::new(-1.0, 8).is_err());
    }

    #[test]
    fn nyquist_is_negative() {
        let g = TorusGrid::new(2.0 * PI, 8).unwrap();
        let freqs: Vec<i64> = (0..8).map(|p| g.frequency(p)).collect();
        assert_eq!(freqs, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        assert_eq!(g.frequency_index(-4), 4);
    }

    #[test]
    fn laplacian_of_constant_vanishes() {
        let g = TorusGrid::new(5.0, 16).unwrap();
        let mut plan = SpectralPlan::new(g);
        let f = TorusField::from_fn(g, |_, _| Complex64::new(2.5, -1.0));
        let lap = plan.neg_laplacian(&f).unwrap();
        assert!(lap.sup_norm() < 1e-12);
    }

    #[test]
    fn plane_wave_is_eigenfunction() {
        let g = TorusGrid::new(3.0, 16).unwrap();
        let mut plan = SpectralPlan::new(g);
        let f = TorusField::plane_wave(g, (1, 0));
        let k2 = (2.0 * PI / 3.0).powi(2);
        let lap = plan.neg_laplacian(&f).unwrap();
        let err = lap
            .values()
            .iter()
            .zip(f.values().iter())
            .map(|(a, b)| (a - b * k2).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "err = {err}");
    }

    #[test]
    fn dirichlet_form_matches_frequency_sum() {
        let g = TorusGrid::new(4.0, 16).unwrap();
        let mut plan = SpectralPlan::new(g);
        let f = smooth_field(g, 3);
        let lap = plan.neg_laplacian(&f).unwrap();
        let quad = f.inner(&lap).unwrap();
        // independent frequency-space sum with an explicit DFT
        let n = g.points();
        let h2 = g.cell_area();
        let mut oracle = 0.0;
        for p in 0..n {
            for q in 0..n {
                let (kx, ky) = (g.wavenumber(p), g.wavenumber(q));
                let mut fhat = Complex64::new(0.0, 0.0);
                for i in 0..n {
                    for j in 0..n {
                        let phase = -2.0 * PI * ((p * i + q * j) as f64) / n as f64;
                        fhat += f.values()[[i, j]] * Complex64::from_polar(1.0, phase);
                    }
                }
                oracle += (kx * kx + ky * ky) * fhat.norm_sqr();
            }
        }
        oracle *= h2 / (n * n) as f64;
        assert!(quad.re >= 0.0);
        assert!(quad.im.abs() < 1e-10 * oracle);
        assert!((quad.re - oracle).abs() < 1e-10 * oracle, "{} vs {}", quad.re, oracle);
    }

    #[test]
    fn laplacian_is_self_adjoint() {
        let g = TorusGrid::new(4.0, 32).unwrap();
        let mut plan = SpectralPlan::new(g);
        let f = random_field(g, 1);
        let h = random_field(g, 2);
        let lf = plan.neg_laplacian(&f).unwrap();
        let lh = plan.neg_laplacian(&h).unwrap();
        let a = f.inner(&lh).unwrap();
        let b = lf.inner(&h).unwrap();
        assert!((a - b).norm() < 1e-12 * a.norm().max(1.0));
    }

    #[test]
    fn parseval_holds() {
        let g = TorusGrid::new(7.0, 32).unwrap();
        let mut plan = SpectralPlan::new(g);
        let f = random_field(g, 5);
        let hat = plan.forward(&f).unwrap();
        let freq_mass = plan.spectral_sum(&hat, |_| 1.0);
        assert!((freq_mass - f.mass()).abs() < 1e-12 * f.mass());
    }

    #[test]
    fn inverse_undoes_forward() {
        let g = TorusGrid::new(1.0, 64).unwrap();
        let mut plan = SpectralPlan::new(g);
        let f = random_field(g, 9);
        let hat = plan.forward(&f).unwrap();
        let back = plan.inverse(hat);
        let err = back.difference(&f).unwrap().sup_norm();
        assert!(err < 1e-13 * f.sup_norm(), "{err}");
    }

    #[test]
    fn convolution_with_discrete_delta_is_identity() {
        let g = TorusGrid::new(3.0, 16).unwrap();
        let mut plan = SpectralPlan::new(g);
        let mut delta = TorusField::zeros(g);
        delta.values_mut()[[8, 8]] = Complex64::new(1.0 / g.cell_area(), 0.0);
        let d = random_field(g, 4);
        let out = plan.convolve(&delta, &d).unwrap();
        assert!(out.difference(&d).unwrap().sup_norm() < 1e-12);
    }

    #[test]
    fn convolution_of_constant_density() {
        let g = TorusGrid::new(3.0, 16).unwrap();
        let mut plan = SpectralPlan::new(g);
        let kernel = random_field(g, 11);
        let c = Complex64::new(0.7, 0.0);
        let d = TorusField::from_fn(g, |_, _| c);
        let out = plan.convolve(&kernel, &d).unwrap();
        let expected = c * kernel.integral();
        for v in out.values() {
            assert!((v - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn convolution_matches_direct_sum() {
        let g = TorusGrid::new(2.0, 8).unwrap();
        let mut plan = SpectralPlan::new(g);
        let k = random_field(g, 21);
        let d = random_field(g, 22);
        let out = plan.convolve(&k, &d).unwrap();
        let n = 8;
        let h2 = g.cell_area();
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for a in 0..n {
                    for b in 0..n {
                        // displacement x_i - y_a in samples, re-centered on index n/2
                        let di = (i + n + n / 2 - a) % n;
                        let dj = (j + n + n / 2 - b) % n;
                        acc += k.values()[[di, dj]] * d.values()[[a, b]] * h2;
                    }
                }
                assert!((acc - out.values()[[i, j]]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn convolution_is_commutative_and_bilinear() {
        let g = TorusGrid::new(2.5, 16).unwrap();
        let mut plan = SpectralPlan::new(g);
        let a = random_field(g, 31);
        let b = random_field(g, 32);
        let c = random_field(g, 33);
        let ab = plan.convolve(&a, &b).unwrap();
        let ba = plan.convolve(&b, &a).unwrap();
        assert!(ab.difference(&ba).unwrap().sup_norm() < 1e-12);

        let alpha = Complex64::new(0.3, -1.2);
        let mut combo = b.clone();
        combo.values_mut().zip_mut_with(c.values(), |x, y| *x = alpha * *x + y);
        let lhs = plan.convolve(&a, &combo).unwrap();
        let ac = plan.convolve(&a, &c).unwrap();
        let mut rhs = ab.clone();
        rhs.values_mut().zip_mut_with(ac.values(), |x, y| *x = alpha * *x + y);
        assert!(lhs.difference(&rhs).unwrap().sup_norm() < 1e-12);
    }

    #[test]
    fn norms_of_zero_and_gaussian() {
        let g = TorusGrid::new(16.0, 128).unwrap();
        let mut plan = SpectralPlan::new(g);
        let z = plan.norms(&TorusField::zeros(g)).unwrap();
        assert_eq!((z.mass, z.kinetic, z.h1), (0.0, 0.0, 0.0));

        // unit-mass Gaussian; box truncation error is far below 1e-8 at L = 16 σ
        let f = TorusField::gaussian(g, 1.0, (0.0, 0.0));
        let n = plan.norms(&f).unwrap();
        assert!((n.mass - 1.0).abs() < 1e-8, "{}", n.mass);
        // ∫|∇φ|² = 1/σ² for this normalization
        assert!((n.kinetic - 1.0).abs() < 1e-8);
        assert!(n.h1 >= n.mass);
        assert!(f.boundary_ratio() < 1e-8);
    }

    #[test]
    fn lp_of_constant() {
        let g = TorusGrid::new(3.0, 8).unwrap();
        let c = 1.7;
        let f = TorusField::from_fn(g, |_, _| Complex64::new(c, 0.0));
        assert!((f.lp(4.0) - c.powi(4) * 9.0).abs() < 1e-12);
    }

    #[test]
    fn binary_round_trip() {
        let g = TorusGrid::new(3.0, 8).unwrap();
        let f = random_field(g, 77);
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("phi");
        f.save(&stem).unwrap();
        let back = TorusField::load(&stem).unwrap();
        assert_eq!(back, f);
        let header: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(stem.with_extension("json")).unwrap()).unwrap();
        assert_eq!(header["n"], 8);
        assert_eq!(std::fs::metadata(stem.with_extension("bin")).unwrap().len(), 16 * 64);
    }

    #[test]
    fn free_evolution_of_plane_wave_is_exact() {
        let g = TorusGrid::new(2.0 * PI, 16).unwrap();
        let mut plan = SpectralPlan::new(g);
        let f0 = TorusField::plane_wave(g, (2, -1));
        let mut f = f0.clone();
        let t = 0.37;
        plan.free_evolve(&mut f, t).unwrap();
        let phase = Complex64::from_polar(1.0, -5.0 * t);
        let err = f
            .values()
            .iter()
            .zip(f0.values())
            .map(|(a, b)| (a - b * phase).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12);
    }
}
