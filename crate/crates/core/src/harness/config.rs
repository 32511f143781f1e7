//! Experiment configuration: a sectioned TOML file with a canonical
//! serialization whose hash keys reproducible artifacts.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::effective::BlowupConfig;
use crate::error::{LabError, Result};
use crate::fock::DEFAULT_DIMENSION_CAP;
use crate::interaction::PotentialProfile;
use crate::spectral::TorusGrid;

/// Seed used when a config does not name one.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    RateStudy,
    Blowup,
    Condensation,
    NormApprox,
    Verify,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::RateStudy => "rate_study",
            Self::Blowup => "blowup",
            Self::Condensation => "condensation",
            Self::NormApprox => "norm_approx",
            Self::Verify => "verify",
        }
    }
}

/// Size of the verification suite.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Envelope {
    #[default]
    Tiny,
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Artifact directory; the CLI may override it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub envelope: Envelope,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

/// Interaction profile; disks are specified by their coupling `b = ∫ w`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Zero,
    Disk {
        coupling: f64,
        #[serde(default = "unit")]
        radius: f64,
    },
    Bump {
        amplitude: f64,
        #[serde(default = "unit")]
        radius: f64,
        #[serde(default = "unit")]
        stiffness: f64,
    },
    Ring {
        inner_depth: f64,
        outer_height: f64,
        #[serde(default = "unit")]
        radius: f64,
    },
}

fn unit() -> f64 {
    1.0
}

impl ProfileSpec {
    pub fn to_profile(self) -> PotentialProfile {
        match self {
            Self::Zero => PotentialProfile::Zero,
            Self::Disk { coupling, radius } => PotentialProfile::disk_with_coupling(coupling, radius),
            Self::Bump {
                amplitude,
                radius,
                stiffness,
            } => PotentialProfile::Bump {
                amplitude,
                radius,
                stiffness,
            },
            Self::Ring {
                inner_depth,
                outer_height,
                radius,
            } => PotentialProfile::Ring {
                inner_depth,
                outer_height,
                radius,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingSection {
    pub beta: f64,
    pub particles: Vec<usize>,
}

impl Default for ScalingSection {
    fn default() -> Self {
        Self {
            beta: 0.5,
            particles: vec![2, 3, 4],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub length: f64,
    pub points: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            length: 16.0,
            points: 256,
        }
    }
}

/// Centered Gaussian initial datum, normalized in `L²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSection {
    pub width: f64,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self { width: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FockSection {
    /// Number of plane-wave modes `K`.
    pub modes: usize,
    /// `δ` in `M = N^{1-δ}`.
    pub delta: f64,
    /// Excitation-number cutoff of the Bogoliubov space.
    pub excitation_cutoff: usize,
    /// Refuse bases larger than this.
    pub basis_cap: usize,
}

impl Default for FockSection {
    fn default() -> Self {
        Self {
            modes: 6,
            delta: 0.5,
            excitation_cutoff: 8,
            basis_cap: DEFAULT_DIMENSION_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeSection {
    pub t_final: f64,
    pub dt: f64,
    pub t_eval: f64,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self {
            t_final: 0.2,
            dt: 1e-3,
            t_eval: 0.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlowupSection {
    pub h1_factor: f64,
    pub tail_limit: f64,
    pub tail_cutoff: f64,
    pub dt_min: f64,
}

impl Default for BlowupSection {
    fn default() -> Self {
        let d = BlowupConfig::default();
        Self {
            h1_factor: d.h1_factor,
            tail_limit: d.tail_limit,
            tail_cutoff: d.tail_cutoff,
            dt_min: d.dt_min,
        }
    }
}

/// How a fitted rate slope is compared with `-β`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlopeCheck {
    /// `|slope + β| ≤ tolerance`.
    #[default]
    TwoSided,
    /// `slope ≤ -β + tolerance`: the error decays at least like `N^{-β}`.
    UpperBound,
}

/// Thresholds of the assertions embedded in a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssertionSection {
    /// Allowed excess of the fitted slope over `-β`.
    pub slope_tolerance: f64,
    pub slope_check: SlopeCheck,
    /// Largest norm drift allowed along a Fock-space trajectory.
    pub norm_drift: f64,
    /// Expected outcome of a blow-up run; derived from the profile when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expect_blowup: Option<bool>,
}

impl Default for AssertionSection {
    fn default() -> Self {
        Self {
            slope_tolerance: 0.15,
            slope_check: SlopeCheck::TwoSided,
            norm_drift: 1e-9,
            expect_blowup: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub profile: ProfileSpec,
    #[serde(default)]
    pub scaling: ScalingSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub fock: FockSection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub blowup: BlowupSection,
    #[serde(default)]
    pub assertions: AssertionSection,
}

fn config_error(field: &str, reason: impl Into<String>) -> LabError {
    LabError::Config {
        field: field.to_string(),
        reason: reason.into(),
    }
}

fn positive(field: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(config_error(field, format!("must be positive, got {value}")))
    }
}

impl ExperimentConfig {
    /// A config with every section at its default.
    pub fn new(kind: ExperimentKind, profile: ProfileSpec) -> Self {
        Self {
            experiment: ExperimentSection {
                kind,
                seed: DEFAULT_SEED,
                output: None,
                envelope: Envelope::Tiny,
            },
            profile,
            scaling: ScalingSection::default(),
            grid: GridSection::default(),
            initial: InitialSection::default(),
            fock: FockSection::default(),
            time: TimeSection::default(),
            blowup: BlowupSection::default(),
            assertions: AssertionSection::default(),
        }
    }

    /// Parses and validates a config.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| {
            let field = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                .map_or_else(|| "<root>".to_string(), |line| format!("line {line}"));
            config_error(&field, e.message().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// Canonical text: fixed section and key order, defaults written out.
    pub fn to_canonical_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_error("<root>", e.to_string()))
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn canonical_hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.to_canonical_string()?.as_bytes())))
    }

    pub fn grid(&self) -> Result<TorusGrid> {
        TorusGrid::new(self.grid.length, self.grid.points)
    }

    pub fn blowup_config(&self) -> BlowupConfig {
        BlowupConfig {
            t_final: self.time.t_final,
            dt_max: self.time.dt,
            h1_factor: self.blowup.h1_factor,
            tail_limit: self.blowup.tail_limit,
            tail_cutoff: self.blowup.tail_cutoff,
            dt_min: self.blowup.dt_min,
        }
    }

    /// Checks every parameter against the preconditions of the experiment.
    pub fn validate(&self) -> Result<()> {
        self.profile
            .to_profile()
            .validate()
            .map_err(|e| config_error("profile", e.to_string()))?;
        if let ProfileSpec::Disk { radius, .. } = self.profile {
            positive("profile.radius", radius)?;
        }
        let beta = self.scaling.beta;
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(config_error("scaling.beta", "must be positive"));
        }
        positive("grid.length", self.grid.length)?;
        if self.grid.points < 4 || self.grid.points % 2 != 0 {
            return Err(config_error("grid.points", "must be an even number ≥ 4"));
        }
        positive("initial.width", self.initial.width)?;
        positive("time.dt", self.time.dt)?;
        positive("time.t_final", self.time.t_final)?;
        positive("time.t_eval", self.time.t_eval)?;
        positive("assertions.slope_tolerance", self.assertions.slope_tolerance)?;
        positive("assertions.norm_drift", self.assertions.norm_drift)?;
        positive("blowup.h1_factor", self.blowup.h1_factor)?;
        if !(0.0..1.0).contains(&self.fock.delta) {
            return Err(config_error("fock.delta", "must lie in [0, 1)"));
        }
        if self.fock.basis_cap == 0 {
            return Err(config_error("fock.basis_cap", "must be positive"));
        }
        let particles = &self.scaling.particles;
        match self.experiment.kind {
            ExperimentKind::RateStudy => {
                if particles.len() < 3 {
                    return Err(config_error(
                        "scaling.particles",
                        format!("a rate study needs at least three values of N, got {}", particles.len()),
                    ));
                }
                if particles.contains(&0) {
                    return Err(config_error("scaling.particles", "N must be positive"));
                }
            }
            ExperimentKind::Condensation | ExperimentKind::NormApprox => {
                if particles.is_empty() || particles.iter().any(|&n| n < 2) {
                    return Err(config_error("scaling.particles", "needs N ≥ 2 for every entry"));
                }
                if self.fock.modes < 2 {
                    return Err(config_error("fock.modes", "needs at least two modes"));
                }
                if 4 * mode_radius(self.fock.modes) >= self.grid.points {
                    return Err(config_error("grid.points", "too coarse for the requested plane-wave modes"));
                }
                if self.fock.excitation_cutoff == 0 {
                    return Err(config_error("fock.excitation_cutoff", "must be positive"));
                }
            }
            ExperimentKind::Blowup | ExperimentKind::Verify => {}
        }
        Ok(())
    }
}

/// Largest `|k_i|` among the first `modes` plane waves, a cheap bound used for validation.
fn mode_radius(modes: usize) -> usize {
    let mut r = 0;
    while (2 * r + 1) * (2 * r + 1) < modes {
        r += 1;
    }
    r
}
