//! Condensate frames: the Galerkin Hartree flow and an orthonormal basis of
//! the excited space transported along it.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::manybody::{step_count, ModeModel};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Mean-field quantities of a condensate `u` in mode coordinates.
#[derive(Clone, Debug)]
pub struct MeanField {
    /// `w_N ∗ |u|²` as a matrix: `W[a, b] = Σ V[a, c, b, d] conj(u_c) u_d`.
    pub potential: DMatrix<Complex64>,
    /// `μ = ½ ⟨u, W u⟩`.
    pub chemical_potential: f64,
    /// `h = -Δ + W - μ`.
    pub hartree: DMatrix<Complex64>,
}

pub fn mean_field(model: &ModeModel, u: &[Complex64]) -> MeanField {
    let k = model.modes();
    let v = model.interaction();
    let mut w = DMatrix::<Complex64>::zeros(k, k);
    for a in 0..k {
        for b in 0..k {
            let mut acc = ZERO;
            for c in 0..k {
                let uc = u[c].conj();
                if uc == ZERO {
                    continue;
                }
                for d in 0..k {
                    acc += v.get(a, c, b, d) * uc * u[d];
                }
            }
            w[(a, b)] = acc;
        }
    }
    let uv = nalgebra::DVector::from_column_slice(u);
    let mu = 0.5 * (uv.adjoint() * &w * &uv)[(0, 0)].re;
    let hartree = model.kinetic() + &w - DMatrix::<Complex64>::identity(k, k) * Complex64::new(mu, 0.0);
    MeanField {
        potential: w,
        chemical_potential: mu,
        hartree,
    }
}

/// Hartree energy `⟨u, -Δ u⟩ + ½ ⟨u, (w ∗ |u|²) u⟩`.
pub fn hartree_energy(model: &ModeModel, u: &[Complex64]) -> f64 {
    let mf = mean_field(model, u);
    let uv = nalgebra::DVector::from_column_slice(u);
    (uv.adjoint() * model.kinetic() * &uv)[(0, 0)].re + mf.chemical_potential
}

/// Unitary `F` whose column 0 is the condensate `u` and whose remaining
/// columns span `{u}^⊥` within the mode space.
#[derive(Clone, Debug)]
pub struct ExcitationFrame {
    matrix: DMatrix<Complex64>,
    time: f64,
}

fn normalize_column(m: &mut DMatrix<Complex64>, j: usize) -> f64 {
    let n = m.column(j).norm();
    m.column_mut(j).iter_mut().for_each(|z| *z /= n);
    n
}

/// Modified Gram–Schmidt on the columns, in order, applied twice.
fn orthonormalize(m: &mut DMatrix<Complex64>) {
    for _ in 0..2 {
        for j in 0..m.ncols() {
            for i in 0..j {
                let proj = m.column(i).dotc(&m.column(j));
                let ci = m.column(i).clone_owned();
                m.column_mut(j).axpy(-proj, &ci, Complex64::new(1.0, 0.0));
            }
            normalize_column(m, j);
        }
    }
}

impl ExcitationFrame {
    /// Completes `u` with the `q`-projected mode vectors, picking at each step the
    /// candidate with the largest remaining norm (ties go to the lower index).
    pub fn from_condensate(u: &[Complex64], time: f64) -> Result<Self> {
        let k = u.len();
        let norm = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(invalid("u", "condensate must be nonzero"));
        }
        let mut m = DMatrix::<Complex64>::zeros(k, k);
        for (i, z) in u.iter().enumerate() {
            m[(i, 0)] = z / norm;
        }
        let mut used = vec![false; k];
        for j in 1..k {
            let mut best: Option<(usize, f64, nalgebra::DVector<Complex64>)> = None;
            for cand in 0..k {
                if used[cand] {
                    continue;
                }
                let mut r = nalgebra::DVector::<Complex64>::zeros(k);
                r[cand] = Complex64::new(1.0, 0.0);
                for _ in 0..2 {
                    for i in 0..j {
                        let proj = m.column(i).dotc(&r);
                        r.axpy(-proj, &m.column(i).clone_owned(), Complex64::new(1.0, 0.0));
                    }
                }
                let rn = r.norm();
                if best.as_ref().is_none_or(|b| rn > b.1 + 1e-12) {
                    best = Some((cand, rn, r));
                }
            }
            let (cand, rn, r) = best.expect("a candidate remains");
            used[cand] = true;
            m.set_column(j, &(r / Complex64::new(rn, 0.0)));
        }
        Ok(Self { matrix: m, time })
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn modes(&self) -> usize {
        self.matrix.nrows()
    }

    /// Number of excitation modes, `K - 1`.
    pub fn excitation_modes(&self) -> usize {
        self.modes() - 1
    }

    pub fn condensate(&self) -> Vec<Complex64> {
        self.matrix.column(0).iter().copied().collect()
    }

    /// `q = 1 - |u⟩⟨u|` in mode coordinates.
    pub fn projector_q(&self) -> DMatrix<Complex64> {
        let u = self.matrix.column(0);
        DMatrix::identity(self.modes(), self.modes()) - &u * u.adjoint()
    }

    /// `max |F†F - 1|`.
    pub fn orthonormality_residual(&self) -> f64 {
        let k = self.modes();
        (self.matrix.adjoint() * &self.matrix - DMatrix::<Complex64>::identity(k, k)).camax()
    }

    /// Frame coordinates `F† A F` of a one-body matrix.
    pub fn to_frame(&self, a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        self.matrix.adjoint() * a * &self.matrix
    }

    /// Excitation block `(F† A F)[1.., 1..]`, the matrix of `qAq` on `{u}^⊥`.
    pub fn perp_block(&self, a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let f = self.to_frame(a);
        let k = self.modes();
        f.view((1, 1), (k - 1, k - 1)).into_owned()
    }

    /// Excitation coordinates of `q v`.
    pub fn perp_vector(&self, v: &[Complex64]) -> Vec<Complex64> {
        let fv = self.matrix.adjoint() * nalgebra::DVector::from_column_slice(v);
        fv.iter().skip(1).copied().collect()
    }

    /// Mode coordinates of the excitation vector `Σ_j c_j f_j`.
    pub fn from_perp(&self, c: &[Complex64]) -> Vec<Complex64> {
        let k = self.modes();
        (0..k)
            .map(|i| c.iter().enumerate().map(|(j, cj)| self.matrix[(i, j + 1)] * cj).sum())
            .collect()
    }

    /// Advances `u` by the Galerkin Hartree flow `i u̇ = h u` and transports the
    /// excitation modes by `i ḟ = |u⟩⟨u| h f`; one RK4 step of size `dt`.
    fn rk4_step(&mut self, model: &ModeModel, dt: f64) {
        let rhs = |f: &DMatrix<Complex64>| -> DMatrix<Complex64> {
            let u: Vec<Complex64> = f.column(0).iter().copied().collect();
            let h = mean_field(model, &u).hartree;
            let uc = f.column(0);
            let p = &uc * uc.adjoint();
            let a = &h * &p + &p * &h - &p * &h * &p;
            (a * f) * Complex64::new(0.0, -1.0)
        };
        let f0 = self.matrix.clone();
        let half = Complex64::new(0.5 * dt, 0.0);
        let full = Complex64::new(dt, 0.0);
        let k1 = rhs(&f0);
        let k2 = rhs(&(&f0 + &k1 * half));
        let k3 = rhs(&(&f0 + &k2 * half));
        let k4 = rhs(&(&f0 + &k3 * full));
        self.matrix = f0 + (k1 + k2 * Complex64::new(2.0, 0.0) + k3 * Complex64::new(2.0, 0.0) + k4) * Complex64::new(dt / 6.0, 0.0);
        orthonormalize(&mut self.matrix);
        self.time += dt;
    }

    /// Advances the frame by `dt` in RK4 substeps no longer than `max_substep`.
    pub fn advance(&mut self, model: &ModeModel, dt: f64, max_substep: f64) {
        let n = ((dt.abs() / max_substep).ceil() as usize).max(1);
        for _ in 0..n {
            self.rk4_step(model, dt / n as f64);
        }
    }
}

/// Frames at every half step `k·dt/2` of a propagation grid.
#[derive(Clone, Debug)]
pub struct FrameSchedule {
    dt: f64,
    frames: Vec<ExcitationFrame>,
}

/// Default RK4 substep for the frame flow.
pub const FRAME_SUBSTEP: f64 = 2.5e-4;

impl FrameSchedule {
    pub fn compute(model: &ModeModel, u0: &[Complex64], t_end: f64, dt: f64) -> Result<Self> {
        let steps = step_count(t_end, dt)?;
        let h = if steps == 0 { 0.0 } else { t_end / steps as f64 };
        let mut frame = ExcitationFrame::from_condensate(u0, 0.0)?;
        let mut frames = vec![frame.clone()];
        for _ in 0..2 * steps {
            frame.advance(model, 0.5 * h, FRAME_SUBSTEP);
            frames.push(frame.clone());
        }
        Ok(Self { dt: h, frames })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        (self.frames.len() - 1) / 2
    }

    /// Frame at `t = k·dt`.
    pub fn at_step(&self, k: usize) -> &ExcitationFrame {
        &self.frames[2 * k]
    }

    /// Frame at `t = (k + ½)·dt`.
    pub fn midpoint(&self, k: usize) -> &ExcitationFrame {
        &self.frames[2 * k + 1]
    }

    pub fn last(&self) -> &ExcitationFrame {
        self.frames.last().expect("schedules contain the initial frame")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::dense::random_vector;
    use crate::interaction::{PotentialProfile, ScaledPotential};
    use crate::spectral::TorusGrid;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model() -> ModeModel {
        let grid = TorusGrid::new(5.0, 32).unwrap();
        let pot = ScaledPotential::new(PotentialProfile::disk_with_coupling(-5.85, 1.0), 3, 0.5, grid).unwrap();
        ModeModel::plane_waves(&pot, 5).unwrap()
    }

    #[test]
    fn frame_is_unitary_with_condensate_first() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_vector(5, &mut rng);
        let f = ExcitationFrame::from_condensate(&u, 0.0).unwrap();
        assert!(f.orthonormality_residual() < 1e-13);
        for (a, b) in f.condensate().iter().zip(&u) {
            assert!((a - b).norm() < 1e-15);
        }
        let q = f.projector_q();
        assert!((&q * &q - &q).camax() < 1e-14);
        assert!((q.adjoint() - &q).camax() < 1e-15);
    }

    #[test]
    fn pivoting_is_deterministic_for_plane_wave_condensate() {
        let mut u = vec![Complex64::new(0.0, 0.0); 4];
        u[0] = Complex64::new(1.0, 0.0);
        let f = ExcitationFrame::from_condensate(&u, 0.0).unwrap();
        assert!((f.matrix() - DMatrix::<Complex64>::identity(4, 4)).camax() < 1e-15);
    }

    #[test]
    fn transport_conserves_mass_energy_and_orthogonality() {
        let m = model();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u0 = random_vector(5, &mut rng);
        let sched = FrameSchedule::compute(&m, &u0, 0.5, 0.01).unwrap();
        let e0 = hartree_energy(&m, &u0);
        let last = sched.last();
        assert!(last.orthonormality_residual() < 1e-13);
        assert!((hartree_energy(&m, &last.condensate()) - e0).abs() < 1e-10 * e0.abs().max(1.0));
        assert!((last.time() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn transported_modes_have_no_internal_rotation() {
        // i ḟ_j = p h f_j implies ⟨f_i, ḟ_j⟩ = 0 for i, j ≥ 1.
        let m = model();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u0 = random_vector(5, &mut rng);
        let mut f = ExcitationFrame::from_condensate(&u0, 0.0).unwrap();
        let before = f.matrix().clone();
        let dt = 1e-5;
        f.advance(&m, dt, FRAME_SUBSTEP);
        let overlap = before.adjoint() * f.matrix();
        let block = overlap.view((1, 1), (4, 4)).into_owned() - DMatrix::<Complex64>::identity(4, 4);
        assert!(block.camax() < 1e-8);
    }
}
