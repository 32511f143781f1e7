//! Bosonic Fock spaces over finitely many modes: occupation bases, sparse
//! second quantization and Krylov time propagation.

pub mod basis;
pub mod dense;
pub mod krylov;
pub mod modes;
pub mod ops;
pub mod oracle;
pub mod sparse;
pub mod state;

pub use basis::{BasisKind, OccupationBasis, DEFAULT_DIMENSION_CAP};
pub use krylov::{krylov_propagate, lanczos_min_eigenvalue, KrylovOptions, KrylovOutcome};
pub use modes::{ModeBasis, SiteModel};
pub use ops::{
    annihilation, creation, cubic_creation, cutoff_projector, dgamma1, dgamma2, lift, number, number_function, pair_creation,
    smeared_annihilation, smeared_creation, smooth_cutoff, smooth_cutoff_profile, TwoBodyKernel,
};
pub use sparse::{SparseOperator, TripletBuilder};
pub use state::FockState;
