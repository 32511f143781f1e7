//! Interaction profiles and their `N`-dependent scalings.
//!
//! A profile `w` is even, bounded and compactly supported. The scaled
//! interaction is `w_N(x) = N^{2β} w(N^β x)`, whose integral `b = ∫ w` does not
//! depend on `N`. Grids store the *cell average* of `w_N` over each sample's
//! cell, so the discrete integral equals `b` even once the support of `w_N`
//! shrinks below a single cell.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};
use crate::spectral::{TorusField, TorusGrid};

/// Radial interaction profiles shipped with the laboratory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialProfile {
    /// The zero interaction.
    Zero,
    /// `w = -depth` on the disk `|x| < radius`.
    Disk { depth: f64, radius: f64 },
    /// `w = amplitude · exp(-stiffness / (1 - |x|²/radius²))` inside the disk, smooth everywhere.
    Bump {
        amplitude: f64,
        radius: f64,
        #[serde(default = "default_stiffness")]
        stiffness: f64,
    },
    /// `w = -inner_depth` for `|x| < radius/2` and `+outer_height` for `radius/2 ≤ |x| < radius`.
    Ring {
        inner_depth: f64,
        outer_height: f64,
        radius: f64,
    },
}

fn default_stiffness() -> f64 {
    1.0
}

/// Sign-based classification of a coupling against the critical value `-a*`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Defocusing,
    StableFocusing,
    Critical,
    Unstable,
}

const GAUSS5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GAUSS5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Subcells per axis used for smooth profiles.
const SUBCELLS: usize = 16;

impl PotentialProfile {
    /// Disk profile with prescribed coupling `b = -depth · π radius²`.
    pub fn disk_with_coupling(b: f64, radius: f64) -> Self {
        PotentialProfile::Disk {
            depth: -b / (PI * radius * radius),
            radius,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check_radius = |r: f64| {
            if r.is_finite() && r > 0.0 {
                Ok(())
            } else {
                Err(invalid("radius", "support radius must be positive"))
            }
        };
        match *self {
            PotentialProfile::Zero => Ok(()),
            PotentialProfile::Disk { depth, radius } => {
                check_radius(radius)?;
                finite("depth", depth)
            }
            PotentialProfile::Bump {
                amplitude,
                radius,
                stiffness,
            } => {
                check_radius(radius)?;
                finite("amplitude", amplitude)?;
                if stiffness.is_finite() && stiffness > 0.0 {
                    Ok(())
                } else {
                    Err(invalid("stiffness", "must be positive"))
                }
            }
            PotentialProfile::Ring {
                inner_depth,
                outer_height,
                radius,
            } => {
                check_radius(radius)?;
                finite("inner_depth", inner_depth)?;
                finite("outer_height", outer_height)
            }
        }
    }

    pub fn support_radius(&self) -> f64 {
        match *self {
            PotentialProfile::Zero => 0.0,
            PotentialProfile::Disk { radius, .. }
            | PotentialProfile::Bump { radius, .. }
            | PotentialProfile::Ring { radius, .. } => radius,
        }
    }

    pub fn sup_bound(&self) -> f64 {
        match *self {
            PotentialProfile::Zero => 0.0,
            PotentialProfile::Disk { depth, .. } => depth.abs(),
            PotentialProfile::Bump {
                amplitude, stiffness, ..
            } => amplitude.abs() * (-stiffness).exp(),
            PotentialProfile::Ring {
                inner_depth,
                outer_height,
                ..
            } => inner_depth.abs().max(outer_height.abs()),
        }
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        let r2 = x * x + y * y;
        match *self {
            PotentialProfile::Zero => 0.0,
            PotentialProfile::Disk { depth, radius } => {
                if r2 < radius * radius {
                    -depth
                } else {
                    0.0
                }
            }
            PotentialProfile::Bump {
                amplitude,
                radius,
                stiffness,
            } => bump(amplitude, stiffness, r2 / (radius * radius)),
            PotentialProfile::Ring {
                inner_depth,
                outer_height,
                radius,
            } => {
                if r2 < 0.25 * radius * radius {
                    -inner_depth
                } else if r2 < radius * radius {
                    outer_height
                } else {
                    0.0
                }
            }
        }
    }

    /// `b = ∫ w`.
    pub fn coupling(&self) -> f64 {
        match *self {
            PotentialProfile::Zero => 0.0,
            PotentialProfile::Disk { depth, radius } => -depth * PI * radius * radius,
            PotentialProfile::Bump {
                amplitude,
                radius,
                stiffness,
            } => PI * radius * radius * amplitude * bump_radial_integral(stiffness),
            PotentialProfile::Ring {
                inner_depth,
                outer_height,
                radius,
            } => PI * radius * radius * (0.75 * outer_height - 0.25 * inner_depth),
        }
    }

    /// The profile `|w|^α`, which stays within the family.
    pub fn abs_power(&self, alpha: f64) -> Self {
        match *self {
            PotentialProfile::Zero => PotentialProfile::Zero,
            PotentialProfile::Disk { depth, radius } => PotentialProfile::Disk {
                depth: -depth.abs().powf(alpha),
                radius,
            },
            PotentialProfile::Bump {
                amplitude,
                radius,
                stiffness,
            } => PotentialProfile::Bump {
                amplitude: amplitude.abs().powf(alpha),
                radius,
                stiffness: stiffness * alpha,
            },
            PotentialProfile::Ring {
                inner_depth,
                outer_height,
                radius,
            } => PotentialProfile::Ring {
                inner_depth: -inner_depth.abs().powf(alpha),
                outer_height: outer_height.abs().powf(alpha),
                radius,
            },
        }
    }

    /// `-w`, the sign-flipped profile.
    pub fn negated(&self) -> Self {
        match *self {
            PotentialProfile::Zero => PotentialProfile::Zero,
            PotentialProfile::Disk { depth, radius } => PotentialProfile::Disk { depth: -depth, radius },
            PotentialProfile::Bump {
                amplitude,
                radius,
                stiffness,
            } => PotentialProfile::Bump {
                amplitude: -amplitude,
                radius,
                stiffness,
            },
            PotentialProfile::Ring {
                inner_depth,
                outer_height,
                radius,
            } => PotentialProfile::Ring {
                inner_depth: -inner_depth,
                outer_height: -outer_height,
                radius,
            },
        }
    }

    /// `∫ w` over the rectangle `[x0, x1] × [y0, y1]`.
    pub fn rect_integral(&self, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
        match *self {
            PotentialProfile::Zero => 0.0,
            PotentialProfile::Disk { depth, radius } => -depth * rect_disk_area(x0, x1, y0, y1, radius),
            PotentialProfile::Ring {
                inner_depth,
                outer_height,
                radius,
            } => {
                let outer = rect_disk_area(x0, x1, y0, y1, radius);
                let inner = rect_disk_area(x0, x1, y0, y1, 0.5 * radius);
                outer_height * (outer - inner) - inner_depth * inner
            }
            PotentialProfile::Bump { radius, .. } => {
                let (cx0, cx1) = (x0.max(-radius), x1.min(radius));
                let (cy0, cy1) = (y0.max(-radius), y1.min(radius));
                if cx0 >= cx1 || cy0 >= cy1 {
                    return 0.0;
                }
                gauss_2d(|x, y| self.value(x, y), cx0, cx1, cy0, cy1)
            }
        }
    }

    /// Classifies `b` against `-a*` with the default margin `1e-3 · a*`.
    pub fn classify(&self, a_star: f64) -> Stability {
        stability_classify(self.coupling(), a_star, 1e-3 * a_star)
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, "must be finite"))
    }
}

fn bump(amplitude: f64, stiffness: f64, s: f64) -> f64 {
    if s >= 1.0 {
        0.0
    } else {
        amplitude * (-stiffness / (1.0 - s)).exp()
    }
}

/// `∫₀¹ exp(-κ/t) dt` by composite Gauss quadrature.
fn bump_radial_integral(stiffness: f64) -> f64 {
    let panels = 400;
    let width = 1.0 / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * width;
        for (node, weight) in GAUSS5_NODES.iter().zip(GAUSS5_WEIGHTS) {
            let t = mid + 0.5 * width * node;
            total += 0.5 * width * weight * (-stiffness / t).exp();
        }
    }
    total
}

fn gauss_2d(f: impl Fn(f64, f64) -> f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let dx = (x1 - x0) / SUBCELLS as f64;
    let dy = (y1 - y0) / SUBCELLS as f64;
    let mut total = 0.0;
    for a in 0..SUBCELLS {
        let mx = x0 + (a as f64 + 0.5) * dx;
        for b in 0..SUBCELLS {
            let my = y0 + (b as f64 + 0.5) * dy;
            for (nx, wx) in GAUSS5_NODES.iter().zip(GAUSS5_WEIGHTS) {
                for (ny, wy) in GAUSS5_NODES.iter().zip(GAUSS5_WEIGHTS) {
                    total += wx * wy * f(mx + 0.5 * dx * nx, my + 0.5 * dy * ny);
                }
            }
        }
    }
    total * 0.25 * dx * dy
}

/// Antiderivative of `√(r² - x²)` on `[-r, r]`.
fn half_chord_antiderivative(x: f64, r: f64) -> f64 {
    let x = x.clamp(-r, r);
    0.5 * (x * (r * r - x * x).max(0.0).sqrt() + r * r * (x / r).asin())
}

/// `∫_{x0}^{x1} |{y ≥ b} ∩ [-s(x), s(x)]| dx` with `s(x) = √(r² - x²)`.
fn strip_above(x0: f64, x1: f64, b: f64, r: f64) -> f64 {
    let (x0, x1) = (x0.max(-r), x1.min(r));
    if x0 >= x1 || b >= r {
        return 0.0;
    }
    let big_s = |a: f64, c: f64| half_chord_antiderivative(c, r) - half_chord_antiderivative(a, r);
    if b <= -r {
        return 2.0 * big_s(x0, x1);
    }
    let c = (r * r - b * b).sqrt();
    let (i0, i1) = (x0.max(-c), x1.min(c));
    let inner = if i0 < i1 { big_s(i0, i1) - b * (i1 - i0) } else { 0.0 };
    if b >= 0.0 {
        inner
    } else {
        // outside |x| ≤ c the whole chord lies above b
        let left = if x0 < -c { 2.0 * big_s(x0, x1.min(-c)) } else { 0.0 };
        let right = if x1 > c { 2.0 * big_s(x0.max(c), x1) } else { 0.0 };
        inner + left + right
    }
}

/// Exact area of `[x0, x1] × [y0, y1] ∩ {|x| < r}`.
pub fn rect_disk_area(x0: f64, x1: f64, y0: f64, y1: f64, r: f64) -> f64 {
    if r <= 0.0 || x0 >= x1 || y0 >= y1 {
        return 0.0;
    }
    (strip_above(x0, x1, y0, r) - strip_above(x0, x1, y1, r)).max(0.0)
}

/// Coupling classification: `b ≥ 0` defocusing, `|b + a*| < margin` critical,
/// otherwise stable or unstable focusing depending on the side of `-a*`.
pub fn stability_classify(b: f64, a_star: f64, margin: f64) -> Stability {
    if b >= 0.0 {
        Stability::Defocusing
    } else if (b + a_star).abs() < margin {
        Stability::Critical
    } else if b > -a_star {
        Stability::StableFocusing
    } else {
        Stability::Unstable
    }
}

/// A profile scaled to `w_N = N^{2β} w(N^β ·)` and sampled on a grid by cell averaging.
#[derive(Clone, Debug)]
pub struct ScaledPotential {
    profile: PotentialProfile,
    beta: f64,
    particles: usize,
    field: TorusField,
    coupling: f64,
}

impl ScaledPotential {
    pub fn new(profile: PotentialProfile, particles: usize, beta: f64, grid: TorusGrid) -> Result<Self> {
        profile.validate()?;
        if !(beta > 0.0 && beta < 1.5) {
            return Err(invalid("beta", "must lie in (0, 3/2)"));
        }
        if particles < 2 {
            return Err(invalid("N", "at least two particles are required"));
        }
        let lambda = (particles as f64).powf(beta);
        let field = scaled_cell_average(&profile, lambda, grid)?;
        Ok(Self {
            profile,
            beta,
            particles,
            field,
            coupling: profile.coupling(),
        })
    }

    pub fn profile(&self) -> &PotentialProfile {
        &self.profile
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    /// `N^β`.
    pub fn scale(&self) -> f64 {
        (self.particles as f64).powf(self.beta)
    }

    pub fn field(&self) -> &TorusField {
        &self.field
    }

    pub fn grid(&self) -> &TorusGrid {
        self.field.grid()
    }

    /// `b = ∫ w`.
    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    /// `Σ w_N h²`.
    pub fn grid_integral(&self) -> f64 {
        self.field.integral().re
    }

    /// `∫ |w_N|^α` from cell averages of the powered profile.
    pub fn lp_integral(&self, alpha: f64) -> Result<f64> {
        let powered = self.profile.abs_power(alpha);
        let field = scaled_cell_average(&powered, self.scale(), *self.grid())?;
        Ok(field.values().iter().map(|v| v.re.abs()).sum::<f64>() * self.grid().cell_area()
            * self.scale().powf(2.0 * (alpha - 1.0)))
    }

    /// Sup norm of the sampled field.
    pub fn sup_norm(&self) -> f64 {
        self.field.sup_norm()
    }
}

/// Samples `λ² w(λ x)` by averaging over each grid cell.
fn scaled_cell_average(profile: &PotentialProfile, lambda: f64, grid: TorusGrid) -> Result<TorusField> {
    let support = profile.support_radius() / lambda;
    let half_box = 0.5 * grid.length();
    if support >= half_box {
        return Err(LabError::SupportTooLarge { support, half_box });
    }
    let h = grid.spacing();
    let reach = support + h;
    Ok(TorusField::from_fn(grid, |x, y| {
        let (x, y) = (x.abs(), y.abs());
        if x.abs() > reach || y.abs() > reach || *profile == PotentialProfile::Zero {
            return Complex64::new(0.0, 0.0);
        }
        // ∫_cell λ² w(λx) dx = ∫_{λ cell} w(y) dy
        let integral = profile.rect_integral(
            lambda * (x - 0.5 * h),
            lambda * (x + 0.5 * h),
            lambda * (y - 0.5 * h),
            lambda * (y + 0.5 * h),
        );
        Complex64::new(integral / (h * h), 0.0)
    }))
}

/// Log-log table of `∫|w_N|^α` against `N`.
#[derive(Clone, Debug, PartialEq)]
pub struct LpScaling {
    pub particles: Vec<usize>,
    pub integrals: Vec<f64>,
    /// Least-squares slope of `log ∫|w_N|^α` against `log N`.
    pub slope: f64,
}

/// Measures `∫|w_N|^α` for each `N`; the exact scaling law is `N^{2β(α-1)} ∫|w|^α`.
pub fn lp_scaling_check(
    profile: PotentialProfile,
    beta: f64,
    alpha: f64,
    particles: &[usize],
    grid: TorusGrid,
) -> Result<LpScaling> {
    if alpha <= 0.0 {
        return Err(invalid("alpha", "must be positive"));
    }
    if particles.len() < 2 {
        return Err(invalid("N_list", "at least two values are needed for a slope"));
    }
    let mut integrals = Vec::with_capacity(particles.len());
    for &n in particles {
        let direct = ScaledPotential::new(profile, n, beta, grid)?;
        integrals.push(direct.lp_integral(alpha)?);
    }
    let xs: Vec<f64> = particles.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = integrals.iter().map(|v| v.ln()).collect();
    let slope = least_squares_slope(&xs, &ys);
    Ok(LpScaling {
        particles: particles.to_vec(),
        integrals,
        slope,
    })
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    const A_STAR: f64 = 11.700_896_5;

    fn grid() -> TorusGrid {
        TorusGrid::new(16.0, 128).unwrap()
    }

    #[test]
    fn rect_disk_area_matches_known_cases() {
        // whole disk
        assert!((rect_disk_area(-2.0, 2.0, -2.0, 2.0, 1.0) - PI).abs() < 1e-14);
        // one quadrant
        assert!((rect_disk_area(0.0, 2.0, 0.0, 2.0, 1.0) - PI / 4.0).abs() < 1e-14);
        // square inscribed
        let s = 1.0 / 2f64.sqrt();
        assert!((rect_disk_area(-s, s, -s, s, 1.0) - 2.0).abs() < 1e-14);
        // disjoint
        assert_eq!(rect_disk_area(1.5, 2.0, 0.0, 1.0, 1.0), 0.0);
        // half-plane strip y in [0.5, 2]: segment area
        let seg = (1.0f64 / 2.0).acos() - 0.5 * (0.75f64).sqrt();
        assert!((rect_disk_area(-2.0, 2.0, 0.5, 2.0, 1.0) - seg).abs() < 1e-14);
    }

    #[test]
    fn rect_disk_area_matches_fine_sampling() {
        let (x0, x1, y0, y1) = (-0.3, 0.9, -0.95, 0.2);
        let m = 2000;
        let mut count = 0usize;
        for i in 0..m {
            for j in 0..m {
                let x = x0 + (i as f64 + 0.5) * (x1 - x0) / m as f64;
                let y = y0 + (j as f64 + 0.5) * (y1 - y0) / m as f64;
                if x * x + y * y < 1.0 {
                    count += 1;
                }
            }
        }
        let sampled = count as f64 * (x1 - x0) * (y1 - y0) / (m * m) as f64;
        assert!((rect_disk_area(x0, x1, y0, y1, 1.0) - sampled).abs() < 1e-5);
    }

    #[test]
    fn zero_profile_gives_zero_field() {
        let w = ScaledPotential::new(PotentialProfile::Zero, 4, 0.5, grid()).unwrap();
        assert_eq!(w.coupling(), 0.0);
        assert_eq!(w.sup_norm(), 0.0);
    }

    #[test]
    fn unit_disk_integral_is_preserved() {
        let profile = PotentialProfile::Disk { depth: 1.0, radius: 1.0 };
        assert!((profile.coupling() + PI).abs() < 1e-14);
        for n in [2, 4, 16, 64, 1000] {
            for beta in [0.25, 0.5, 1.0, 1.4] {
                let w = ScaledPotential::new(profile, n, beta, grid()).unwrap();
                assert!((w.grid_integral() + PI).abs() < 1e-6 * PI, "N={n}, β={beta}: {}", w.grid_integral());
            }
        }
    }

    #[test]
    fn bump_and_ring_integrals_are_preserved() {
        let profiles = [
            PotentialProfile::Bump {
                amplitude: -3.0,
                radius: 1.2,
                stiffness: 1.0,
            },
            PotentialProfile::Ring {
                inner_depth: 4.0,
                outer_height: 1.0,
                radius: 1.0,
            },
        ];
        for profile in profiles {
            let b = profile.coupling();
            for n in [4, 16, 64, 256] {
                for beta in [0.5, 1.0] {
                    let w = ScaledPotential::new(profile, n, beta, grid()).unwrap();
                    assert!(
                        (w.grid_integral() - b).abs() < 1e-6 * b.abs(),
                        "{profile:?} N={n} β={beta}: {} vs {b}",
                        w.grid_integral()
                    );
                }
            }
        }
    }

    #[test]
    fn bump_coupling_matches_cartesian_quadrature() {
        let profile = PotentialProfile::Bump {
            amplitude: 2.0,
            radius: 1.0,
            stiffness: 1.0,
        };
        let direct = gauss_2d(|x, y| profile.value(x, y), -1.0, 1.0, -1.0, 1.0);
        assert!((direct - profile.coupling()).abs() < 1e-6 * direct.abs(), "{direct} vs {}", profile.coupling());
    }

    #[test]
    fn l1_norm_is_independent_of_n() {
        let profile = PotentialProfile::Ring {
            inner_depth: 4.0,
            outer_height: 1.0,
            radius: 1.0,
        };
        let exact = PI * (0.25 * 4.0 + 0.75 * 1.0);
        for n in [4, 16, 64] {
            let w = ScaledPotential::new(profile, n, 1.0, grid()).unwrap();
            let l1 = w.lp_integral(1.0).unwrap();
            assert!((l1 - exact).abs() < 1e-6 * exact, "{l1}");
        }
    }

    #[test]
    fn sampled_potential_is_even_and_compact() {
        let profile = PotentialProfile::Bump {
            amplitude: -1.0,
            radius: 1.0,
            stiffness: 1.0,
        };
        let g = TorusGrid::new(8.0, 64).unwrap();
        let w = ScaledPotential::new(profile, 3, 0.5, g).unwrap();
        let v = w.field().values();
        let n = g.points();
        let support = profile.support_radius() / w.scale();
        for i in 1..n {
            for j in 1..n {
                // reflection through the origin (index n/2)
                assert_eq!(v[[i, j]], v[[n - i, n - j]]);
                let r = g.coordinate(i).hypot(g.coordinate(j));
                if r > support + g.spacing() * 2f64.sqrt() {
                    assert_eq!(v[[i, j]].re, 0.0);
                }
            }
        }
    }

    #[test]
    fn support_larger_than_half_box_is_rejected() {
        let profile = PotentialProfile::Disk { depth: 1.0, radius: 10.0 };
        let err = ScaledPotential::new(profile, 2, 0.5, TorusGrid::new(8.0, 16).unwrap()).unwrap_err();
        assert!(matches!(err, LabError::SupportTooLarge { .. }));
    }

    #[test]
    fn lp_scaling_slopes() {
        let disk = PotentialProfile::Disk { depth: 1.0, radius: 1.0 };
        let ns = [8, 16, 32, 64, 128, 256];
        let s1 = lp_scaling_check(disk, 0.5, 1.0, &ns, grid()).unwrap();
        assert!(s1.slope.abs() < 1e-9);
        let s2 = lp_scaling_check(disk, 1.0, 2.0, &ns, grid()).unwrap();
        assert!((s2.slope - 2.0).abs() < 1e-9);
        let s3 = lp_scaling_check(disk, 0.5, 3.0, &ns, grid()).unwrap();
        assert!((s3.slope - 2.0).abs() < 0.05);
    }

    #[test]
    fn lp_integral_matches_pointwise_quadrature_when_resolved() {
        // support spans many cells at N = 2, β = 1/2, so midpoint sampling is a fair oracle
        let profile = PotentialProfile::Disk { depth: 2.0, radius: 2.0 };
        let g = TorusGrid::new(16.0, 512).unwrap();
        let w = ScaledPotential::new(profile, 2, 0.5, g).unwrap();
        let lam = w.scale();
        let pointwise: f64 = (0..512)
            .flat_map(|i| (0..512).map(move |j| (i, j)))
            .map(|(i, j)| {
                let v = lam * lam * profile.value(lam * g.coordinate(i), lam * g.coordinate(j));
                v.abs().powi(3)
            })
            .sum::<f64>()
            * g.cell_area();
        let averaged = w.lp_integral(3.0).unwrap();
        assert!((pointwise - averaged).abs() < 2e-2 * averaged);
    }

    #[test]
    fn classification() {
        let m = 1e-3 * A_STAR;
        assert_eq!(stability_classify(0.0, A_STAR, m), Stability::Defocusing);
        assert_eq!(stability_classify(-A_STAR / 2.0, A_STAR, m), Stability::StableFocusing);
        assert_eq!(stability_classify(-2.0 * A_STAR, A_STAR, m), Stability::Unstable);
        assert_eq!(stability_classify(-A_STAR * (1.0 + 1e-5), A_STAR, m), Stability::Critical);
        let p = PotentialProfile::disk_with_coupling(-2.0 * A_STAR, 1.0);
        assert_eq!(p.classify(A_STAR), Stability::Unstable);
        assert_eq!(p.negated().classify(A_STAR), Stability::Defocusing);
    }

    #[test]
    fn profile_config_round_trip() {
        let p = PotentialProfile::Bump {
            amplitude: -1.5,
            radius: 0.7,
            stiffness: 2.0,
        };
        let text = toml::to_string(&p).unwrap();
        assert!(text.contains("kind = \"bump\""));
        let back: PotentialProfile = toml::from_str(&text).unwrap();
        assert_eq!(back, p);
    }
}
