//! Mean-field dynamics: the cubic NLS, the Hartree equation with a scaled
//! interaction, the Townes soliton, blow-up detection and the Hartree to NLS
//! convergence study.
//!
//! Both equations are integrated with Strang splitting. The nonlinear
//! substep multiplies by a pointwise phase, which leaves `|φ|` unchanged and
//! is therefore exact; the linear substep is the exact free evolution in
//! frequency space.

mod blowup;
mod rate;
mod townes;

pub use blowup::{evolve_with_blowup_guard, BlowupConfig, BlowupReport, BlowupSample};
pub use rate::{hartree_vs_nls_rate, RateRow, RateStudy, RateStudyConfig};
pub use townes::{gradient_flow_a_star, townes_ground_state, GradientFlowResult, TownesResult};

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::interaction::ScaledPotential;
use crate::spectral::{SpectralPlan, TorusField};

/// Whether the chemical potential `μ(t)` is subtracted in the generator.
///
/// The two conventions differ by a global, time-dependent phase only.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gauge {
    #[default]
    WithChemicalPotential,
    Plain,
}

/// Common interface of the NLS and Hartree states.
pub trait MeanFieldState {
    fn wavefunction(&self) -> &TorusField;
    fn time(&self) -> f64;
    /// One Strang step of length `dt`.
    fn step(&mut self, plan: &mut SpectralPlan, dt: f64) -> Result<()>;
    /// The conserved energy functional of the equation.
    fn energy(&self, plan: &mut SpectralPlan) -> Result<f64>;
    /// Real potential `V[φ]` entering the generator `-Δ + V - μ`.
    fn potential(&self, plan: &mut SpectralPlan, phi: &TorusField) -> Result<Array2<f64>>;
}

/// State of `i∂ₜφ = (-Δ + b|φ|² - μ(t))φ` with `μ = (b/2)∫|φ|⁴`.
#[derive(Clone, Debug)]
pub struct NlsState {
    pub phi: TorusField,
    pub t: f64,
    pub b: f64,
    pub gauge: Gauge,
}

impl NlsState {
    pub fn new(phi: TorusField, b: f64, gauge: Gauge) -> Self {
        Self { phi, t: 0.0, b, gauge }
    }

    /// `μ(t) = (b/2) ∫|φ|⁴`.
    pub fn chemical_potential(&self) -> f64 {
        0.5 * self.b * self.phi.lp(4.0)
    }
}

impl MeanFieldState for NlsState {
    fn wavefunction(&self) -> &TorusField {
        &self.phi
    }

    fn time(&self) -> f64 {
        self.t
    }

    fn step(&mut self, plan: &mut SpectralPlan, dt: f64) -> Result<()> {
        let mut phi = std::mem::replace(&mut self.phi, TorusField::zeros(*plan.grid()));
        strang_step(self, plan, &mut phi, dt)?;
        self.phi = phi;
        self.t += dt;
        Ok(())
    }

    fn energy(&self, plan: &mut SpectralPlan) -> Result<f64> {
        Ok(plan.kinetic(&self.phi)? + 0.5 * self.b * self.phi.lp(4.0))
    }

    fn potential(&self, _plan: &mut SpectralPlan, phi: &TorusField) -> Result<Array2<f64>> {
        Ok(phi.values().mapv(|v| self.b * v.norm_sqr()))
    }
}

/// State of `i∂ₜu = (-Δ + w * |u|² - μ_N(t))u` with `μ_N = ½∬|u|² w |u|²`.
#[derive(Clone, Debug)]
pub struct HartreeState {
    pub u: TorusField,
    pub t: f64,
    pub gauge: Gauge,
    kernel_hat: Array2<Complex64>,
}

impl HartreeState {
    pub fn new(u: TorusField, potential: &ScaledPotential, plan: &mut SpectralPlan, gauge: Gauge) -> Result<Self> {
        Self::with_kernel(u, potential.field(), plan, gauge)
    }

    /// Uses an arbitrary sampled even kernel in place of `w_N`.
    pub fn with_kernel(u: TorusField, kernel: &TorusField, plan: &mut SpectralPlan, gauge: Gauge) -> Result<Self> {
        u.grid().ensure_same(kernel.grid())?;
        let kernel_hat = plan.kernel_spectrum(kernel)?;
        Ok(Self {
            u,
            t: 0.0,
            gauge,
            kernel_hat,
        })
    }

    /// `μ_N(t) = ½ ∬ |u(x)|² w(x-y) |u(y)|²`.
    pub fn chemical_potential(&self, plan: &mut SpectralPlan) -> Result<f64> {
        let v = self.potential(plan, &self.u)?;
        Ok(0.5 * weighted_density(&self.u, &v))
    }
}

impl MeanFieldState for HartreeState {
    fn wavefunction(&self) -> &TorusField {
        &self.u
    }

    fn time(&self) -> f64 {
        self.t
    }

    fn step(&mut self, plan: &mut SpectralPlan, dt: f64) -> Result<()> {
        let mut u = std::mem::replace(&mut self.u, TorusField::zeros(*plan.grid()));
        strang_step(self, plan, &mut u, dt)?;
        self.u = u;
        self.t += dt;
        Ok(())
    }

    fn energy(&self, plan: &mut SpectralPlan) -> Result<f64> {
        Ok(plan.kinetic(&self.u)? + self.chemical_potential(plan)?)
    }

    fn potential(&self, plan: &mut SpectralPlan, phi: &TorusField) -> Result<Array2<f64>> {
        let conv = plan.convolve_with_spectrum(&self.kernel_hat, &phi.density())?;
        Ok(conv.values().mapv(|v| v.re))
    }
}

fn weighted_density(phi: &TorusField, v: &Array2<f64>) -> f64 {
    phi.values()
        .iter()
        .zip(v.iter())
        .map(|(p, v)| p.norm_sqr() * v)
        .sum::<f64>()
        * phi.grid().cell_area()
}

trait Gauged {
    fn gauge(&self) -> Gauge;
}

impl Gauged for NlsState {
    fn gauge(&self) -> Gauge {
        self.gauge
    }
}

impl Gauged for HartreeState {
    fn gauge(&self) -> Gauge {
        self.gauge
    }
}

fn nonlinear_half_step<S: MeanFieldState + Gauged>(
    state: &S,
    plan: &mut SpectralPlan,
    phi: &mut TorusField,
    tau: f64,
) -> Result<()> {
    let v = state.potential(plan, phi)?;
    let mu = match state.gauge() {
        Gauge::WithChemicalPotential => 0.5 * weighted_density(phi, &v),
        Gauge::Plain => 0.0,
    };
    phi.values_mut()
        .zip_mut_with(&v, |p, &v| *p *= Complex64::from_polar(1.0, -(v - mu) * tau));
    Ok(())
}

fn strang_step<S: MeanFieldState + Gauged>(state: &S, plan: &mut SpectralPlan, phi: &mut TorusField, dt: f64) -> Result<()> {
    nonlinear_half_step(state, plan, phi, 0.5 * dt)?;
    plan.free_evolve(phi, dt)?;
    nonlinear_half_step(state, plan, phi, 0.5 * dt)
}

/// Advances `state` to time `t_end` with steps of at most `dt`.
pub fn evolve_to<S: MeanFieldState>(state: &mut S, plan: &mut SpectralPlan, t_end: f64, dt: f64) -> Result<()> {
    let remaining = t_end - state.time();
    if remaining <= 0.0 {
        return Ok(());
    }
    let steps = (remaining / dt).ceil() as usize;
    let h = remaining / steps as f64;
    for _ in 0..steps {
        state.step(plan, h)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interaction::PotentialProfile;
    use crate::spectral::TorusGrid;

    const A_STAR: f64 = 11.700_896_7;

    fn gaussian(grid: TorusGrid, width: f64) -> TorusField {
        TorusField::gaussian(grid, width, (0.0, 0.0)).normalized()
    }

    #[test]
    fn free_nls_plane_wave_is_exact() {
        let g = TorusGrid::new(2.0 * std::f64::consts::PI, 32).unwrap();
        let mut plan = SpectralPlan::new(g);
        let phi0 = TorusField::plane_wave(g, (1, 2));
        let mut s = NlsState::new(phi0.clone(), 0.0, Gauge::Plain);
        evolve_to(&mut s, &mut plan, 0.7, 0.01).unwrap();
        let phase = Complex64::from_polar(1.0, -5.0 * 0.7);
        for (a, b) in s.phi.values().iter().zip(phi0.values()) {
            assert!((a - b * phase).norm() < 1e-12);
        }
    }

    #[test]
    fn nls_energy_of_constant_vanishes() {
        let g = TorusGrid::new(4.0, 16).unwrap();
        let mut plan = SpectralPlan::new(g);
        let s = NlsState::new(TorusField::from_fn(g, |_, _| Complex64::new(0.25, 0.0)), 0.0, Gauge::Plain);
        assert!(s.energy(&mut plan).unwrap().abs() < 1e-14);
    }

    #[test]
    fn negative_energy_for_supercritical_gaussian() {
        let g = TorusGrid::new(16.0, 256).unwrap();
        let mut plan = SpectralPlan::new(g);
        let s = NlsState::new(gaussian(g, 1.0), -2.0 * A_STAR, Gauge::Plain);
        // analytic: ∫|∇φ|² = 1, ∫|φ|⁴ = 1/(2π)
        let e = s.energy(&mut plan).unwrap();
        let expected = 1.0 - A_STAR / (2.0 * std::f64::consts::PI);
        assert!((e - expected).abs() < 1e-10, "{e} vs {expected}");
        assert!(e < 0.0);
    }

    #[test]
    fn nls_order_two_self_convergence() {
        let g = TorusGrid::new(16.0, 64).unwrap();
        let mut plan = SpectralPlan::new(g);
        let phi0 = gaussian(g, 1.0);
        let run = |plan: &mut SpectralPlan, dt: f64| {
            let mut s = NlsState::new(phi0.clone(), -5.0, Gauge::WithChemicalPotential);
            evolve_to(&mut s, plan, 1.0, dt).unwrap();
            s.phi
        };
        let reference = run(&mut plan, 0.0005);
        let e1 = run(&mut plan, 0.02).difference(&reference).unwrap().mass().sqrt();
        let e2 = run(&mut plan, 0.01).difference(&reference).unwrap().mass().sqrt();
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.4, "ratio {ratio}");
    }

    #[test]
    fn mass_and_gauge() {
        let g = TorusGrid::new(16.0, 64).unwrap();
        let mut plan = SpectralPlan::new(g);
        let phi0 = gaussian(g, 1.0);
        let mut a = NlsState::new(phi0.clone(), -4.0, Gauge::WithChemicalPotential);
        let mut b = NlsState::new(phi0.clone(), -4.0, Gauge::Plain);
        let m0 = a.phi.mass();
        evolve_to(&mut a, &mut plan, 1.0, 0.005).unwrap();
        evolve_to(&mut b, &mut plan, 1.0, 0.005).unwrap();
        assert!((a.phi.mass() - m0).abs() < 1e-12);
        let da = a.phi.density();
        let db = b.phi.density();
        assert!(da.difference(&db).unwrap().sup_norm() < 1e-12);
    }

    #[test]
    fn zero_interaction_hartree_is_free() {
        let g = TorusGrid::new(16.0, 64).unwrap();
        let mut plan = SpectralPlan::new(g);
        let w = ScaledPotential::new(PotentialProfile::Zero, 8, 0.5, g).unwrap();
        let u0 = gaussian(g, 1.0);
        let mut h = HartreeState::new(u0.clone(), &w, &mut plan, Gauge::WithChemicalPotential).unwrap();
        evolve_to(&mut h, &mut plan, 0.3, 0.01).unwrap();
        let mut free = u0;
        plan.free_evolve(&mut free, 0.3).unwrap();
        assert!(h.u.difference(&free).unwrap().sup_norm() < 1e-13);
    }

    #[test]
    fn delta_kernel_hartree_matches_nls() {
        let g = TorusGrid::new(16.0, 64).unwrap();
        let mut plan = SpectralPlan::new(g);
        let b = -3.0;
        let mut delta = TorusField::zeros(g);
        delta.values_mut()[[32, 32]] = Complex64::new(b / g.cell_area(), 0.0);
        let u0 = gaussian(g, 1.0);
        let mut h = HartreeState::with_kernel(u0.clone(), &delta, &mut plan, Gauge::WithChemicalPotential).unwrap();
        let mut n = NlsState::new(u0, b, Gauge::WithChemicalPotential);
        evolve_to(&mut h, &mut plan, 1.0, 0.01).unwrap();
        evolve_to(&mut n, &mut plan, 1.0, 0.01).unwrap();
        assert!(h.u.difference(&n.phi).unwrap().sup_norm() < 1e-10);
    }

    #[test]
    fn hartree_conserves_mass_and_energy() {
        let g = TorusGrid::new(16.0, 128).unwrap();
        let mut plan = SpectralPlan::new(g);
        let profile = PotentialProfile::disk_with_coupling(-A_STAR / 2.0, 1.0);
        let w = ScaledPotential::new(profile, 8, 0.5, g).unwrap();
        let mut h = HartreeState::new(gaussian(g, 1.0), &w, &mut plan, Gauge::WithChemicalPotential).unwrap();
        let m0 = h.u.mass();
        let e0 = h.energy(&mut plan).unwrap();
        evolve_to(&mut h, &mut plan, 1.0, 1e-3).unwrap();
        assert!((h.u.mass() - m0).abs() < 1e-10);
        let e1 = h.energy(&mut plan).unwrap();
        assert!(((e1 - e0) / e0).abs() < 1e-6, "{e0} -> {e1}");
    }
}
