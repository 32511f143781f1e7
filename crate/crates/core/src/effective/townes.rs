//! The Townes soliton `-ΔQ + Q - Q³ = 0` and the critical coupling `a* = ‖Q‖²`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, LabError, Result};
use crate::spectral::{SpectralPlan, TorusField, TorusGrid};

/// Radial Townes profile tabulated on a uniform mesh.
#[derive(Clone, Debug)]
pub struct TownesResult {
    pub step: f64,
    pub radii: Vec<f64>,
    pub profile: Vec<f64>,
    pub derivative: Vec<f64>,
    /// Central value `Q(0)` found by bisection.
    pub center: f64,
    /// `a* = 2π ∫ Q(r)² r dr`.
    pub a_star: f64,
    /// `2π ∫ Q'(r)² r dr`.
    pub kinetic: f64,
    /// `2π ∫ Q(r)⁴ r dr`.
    pub quartic: f64,
    /// Sup norm of `Q'' + Q'/r - Q + Q³` evaluated by finite differences on the table.
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Shot {
    /// `Q` crossed zero: the central value is too large.
    Crossed,
    /// `Q` turned upwards while positive: the central value is too small.
    Turned,
    /// Reached the end of the mesh without either event.
    Undecided,
}

const MESH_STEP: f64 = 1e-3;
const MESH_END: f64 = 40.0;

fn rhs(r: f64, q: f64, dq: f64) -> (f64, f64) {
    (dq, q - q * q * q - dq / r)
}

/// Mesh points near the origin filled from the power series instead of the integrator.
const SERIES_POINTS: usize = 100;
const SERIES_ORDER: usize = 8;

/// Coefficients `c_k` of `Q(r) = Σ c_k r^{2k}` with `Q(0) = q0`.
fn series_coefficients(q0: f64) -> [f64; SERIES_ORDER + 1] {
    let mut c = [0.0; SERIES_ORDER + 1];
    c[0] = q0;
    for k in 1..=SERIES_ORDER {
        let m = k - 1;
        let mut cube = 0.0;
        for i in 0..=m {
            for j in 0..=(m - i) {
                cube += c[i] * c[j] * c[m - i - j];
            }
        }
        c[k] = (c[m] - cube) / (4.0 * (k * k) as f64);
    }
    c
}

fn series_value(c: &[f64], r: f64) -> (f64, f64) {
    let r2 = r * r;
    let mut q = 0.0;
    let mut dq = 0.0;
    let mut p = 1.0;
    for (k, ck) in c.iter().enumerate() {
        q += ck * p;
        if k > 0 {
            dq += 2.0 * k as f64 * ck * p / r;
        }
        p *= r2;
    }
    (q, dq)
}

/// Integrates outward from `Q(0) = q0`, returning the tables and the terminating event.
fn shoot(q0: f64, record: bool) -> (Shot, Vec<f64>, Vec<f64>) {
    let h = MESH_STEP;
    let steps = (MESH_END / h) as usize;
    let coeffs = series_coefficients(q0);
    let mut qs = Vec::new();
    let mut dqs = Vec::new();
    if record {
        qs.push(q0);
        dqs.push(0.0);
        for i in 1..SERIES_POINTS {
            let (q, dq) = series_value(&coeffs, i as f64 * h);
            qs.push(q);
            dqs.push(dq);
        }
    }
    let (mut q, mut dq) = series_value(&coeffs, SERIES_POINTS as f64 * h);
    if record {
        qs.push(q);
        dqs.push(dq);
    }
    for i in SERIES_POINTS..steps {
        let r = i as f64 * h;
        let (k1q, k1d) = rhs(r, q, dq);
        let (k2q, k2d) = rhs(r + 0.5 * h, q + 0.5 * h * k1q, dq + 0.5 * h * k1d);
        let (k3q, k3d) = rhs(r + 0.5 * h, q + 0.5 * h * k2q, dq + 0.5 * h * k2d);
        let (k4q, k4d) = rhs(r + h, q + h * k3q, dq + h * k3d);
        q += h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
        dq += h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
        if q < 0.0 {
            return (Shot::Crossed, qs, dqs);
        }
        if dq > 0.0 {
            return (Shot::Turned, qs, dqs);
        }
        if record {
            qs.push(q);
            dqs.push(dq);
        }
    }
    (Shot::Undecided, qs, dqs)
}

/// Composite Simpson rule on a uniform mesh (drops a trailing odd interval to the trapezoid rule).
fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let intervals = n - 1;
    let even = intervals - intervals % 2;
    let mut total = 0.0;
    for i in (0..even).step_by(2) {
        total += values[i] + 4.0 * values[i + 1] + values[i + 2];
    }
    total *= h / 3.0;
    if even < intervals {
        total += 0.5 * h * (values[n - 2] + values[n - 1]);
    }
    total
}

/// Finds the Townes profile by radial shooting with bisection on `Q(0)`.
pub fn townes_ground_state(tolerance: f64) -> Result<TownesResult> {
    if !(tolerance > 0.0) {
        return Err(invalid("tolerance", "must be positive"));
    }
    let (mut lo, mut hi) = (1.5, 3.0);
    if shoot(lo, false).0 != Shot::Turned || shoot(hi, false).0 != Shot::Crossed {
        return Err(LabError::Bracket(format!("[{lo}, {hi}] does not bracket the ground state")));
    }
    while hi - lo > tolerance.min(1e-15 * hi) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match shoot(mid, false).0 {
            Shot::Turned => lo = mid,
            Shot::Crossed => hi = mid,
            Shot::Undecided => {
                lo = mid;
                break;
            }
        }
    }
    if hi - lo > tolerance.max(1e-14 * hi) {
        return Err(LabError::Bracket(format!("bisection stalled at width {}", hi - lo)));
    }
    let (_, profile, derivative) = shoot(lo, true);
    let h = MESH_STEP;
    let radii: Vec<f64> = (0..profile.len()).map(|i| i as f64 * h).collect();

    let weighted = |f: &dyn Fn(usize) -> f64| {
        let vals: Vec<f64> = (0..profile.len()).map(|i| f(i) * radii[i]).collect();
        2.0 * PI * simpson(&vals, h)
    };
    let a_star = weighted(&|i| profile[i] * profile[i]);
    let kinetic = weighted(&|i| derivative[i] * derivative[i]);
    let quartic = weighted(&|i| profile[i].powi(4));

    let at = |i: isize| profile[i.unsigned_abs()];
    let mut residual = 0.0f64;
    for i in 0..profile.len() as isize - 2 {
        let d2 = (-at(i - 2) + 16.0 * at(i - 1) - 30.0 * at(i) + 16.0 * at(i + 1) - at(i + 2)) / (12.0 * h * h);
        let laplacian = if i == 0 {
            2.0 * d2
        } else {
            let d1 = (at(i - 2) - 8.0 * at(i - 1) + 8.0 * at(i + 1) - at(i + 2)) / (12.0 * h);
            d2 + d1 / (i as f64 * h)
        };
        let q = at(i);
        residual = residual.max((laplacian - q + q * q * q).abs());
    }

    Ok(TownesResult {
        step: h,
        radii,
        profile,
        derivative,
        center: lo,
        a_star,
        kinetic,
        quartic,
        residual,
    })
}

impl TownesResult {
    /// `Q(r)` by cubic Hermite interpolation, with the exponential tail beyond the table.
    pub fn value(&self, r: f64) -> f64 {
        let h = self.step;
        let last = self.profile.len() - 1;
        let s = r / h;
        if s >= last as f64 {
            let r_end = last as f64 * h;
            return self.profile[last] * (r_end / r).sqrt() * (-(r - r_end)).exp();
        }
        let i = s.floor() as usize;
        let t = s - i as f64;
        let (p0, p1) = (self.profile[i], self.profile[i + 1]);
        let (m0, m1) = (self.derivative[i] * h, self.derivative[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * p0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * p1 + (t3 - t2) * m1
    }

    /// Samples `Q(|x - center|)` on a grid.
    pub fn sample(&self, grid: TorusGrid, center: (f64, f64)) -> TorusField {
        TorusField::from_fn(grid, |x, y| Complex64::new(self.value((x - center.0).hypot(y - center.1)), 0.0))
    }
}

/// Outcome of the two-dimensional gradient-flow computation of `a*`.
#[derive(Clone, Debug)]
pub struct GradientFlowResult {
    pub a_star: f64,
    pub iterations: usize,
    pub increment: f64,
    pub minimizer: TorusField,
}

/// Computes `a* = 2 min J`, `J(f) = ‖∇f‖² ‖f‖² / ‖f‖₄⁴`, by a preconditioned
/// normalized gradient flow on a periodic grid.
///
/// Each step moves along `-(1-Δ)⁻¹[(1-Δ)f - λ f³]` with `λ = ⟨f,(1-Δ)f⟩ / ∫f⁴`
/// and then rescales `f` so that `λ = 1`; the fixed point is `Q` itself.
pub fn gradient_flow_a_star(grid: TorusGrid, tolerance: f64, max_iterations: usize) -> Result<GradientFlowResult> {
    let mut plan = SpectralPlan::new(grid);
    let k2 = plan.k_squared().clone();
    let mut f = TorusField::from_fn(grid, |x, y| Complex64::new(2.2 * (-(x * x + y * y) / 2.0).exp(), 0.0));
    let tau = 0.6;
    let mut increment = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iterations {
        iterations += 1;
        let hat = plan.forward(&f)?;
        let energy = plan.spectral_sum(&hat, |k2| 1.0 + k2);
        let quartic = f.lp(4.0);
        let lambda = energy / quartic;
        let cube = TorusField::from_values(grid, f.values().mapv(|v| v * v.norm_sqr()))?;
        let mut cube_hat = plan.forward(&cube)?;
        cube_hat.zip_mut_with(&k2, |c, &k| *c *= lambda / (1.0 + k));
        let pulled = plan.inverse(cube_hat);
        let mut next = f.values().to_owned();
        next.zip_mut_with(pulled.values(), |a, b| *a = (1.0 - tau) * *a + tau * b.re);
        let mut g = TorusField::from_values(grid, next.mapv(|v| Complex64::new(v.re, 0.0)))?;
        let g_energy = plan.norms(&g)?.h1;
        let g_lambda = g_energy / g.lp(4.0);
        g.scale(Complex64::new(g_lambda.sqrt(), 0.0));
        increment = g.difference(&f)?.mass().sqrt() / g.mass().sqrt();
        f = g;
        if increment < tolerance {
            break;
        }
    }
    let norms = plan.norms(&f)?;
    let a_star = 2.0 * norms.kinetic * norms.mass / f.lp(4.0);
    Ok(GradientFlowResult {
        a_star,
        iterations,
        increment,
        minimizer: f,
    })
}
