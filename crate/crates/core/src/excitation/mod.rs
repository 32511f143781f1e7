//! Fluctuations around the condensate: the excitation map, its generator and
//! the truncated excitation dynamics.

pub mod frame;
pub mod generator;
pub mod map;
pub mod truncated;
pub mod weight;

pub use frame::{hartree_energy, mean_field, ExcitationFrame, FrameSchedule, MeanField};
pub use generator::{build_generator, conjugation_check, time_derivative_part, ConjugationReport, FrameKernels, GeneratorParts};
pub use map::{verify_substitution_rules, ExcitationMap, SubstitutionReport};
pub use truncated::{cutoff_rule, mapped_trajectory, truncated_evolution, ExcitationSample, ExcitationTrajectory};
pub use weight::{
    commutator_checks, cutoff_commutator_constant, cutoff_slope_bound, power_inequality_margin, sobolev_ratio,
    sqrt_commutator_quadrature, weight_operator, WeightReport,
};
