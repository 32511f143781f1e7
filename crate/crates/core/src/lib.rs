//! Desk-scale laboratory for the mean-field and Bogoliubov dynamics of a
//! focusing two-dimensional Bose gas.

pub mod bogoliubov;
pub mod cache;
pub mod effective;
pub mod error;
pub mod excitation;
pub mod fit;
pub mod fock;
pub mod harness;
pub mod interaction;
pub mod manybody;
pub mod spectral;

pub use error::{LabError, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/torus.md")]
    mod torus {}
    #[doc = include_str!("../../../book/src/interactions.md")]
    mod interactions {}
    #[doc = include_str!("../../../book/src/mean_field.md")]
    mod mean_field {}
    #[doc = include_str!("../../../book/src/fock.md")]
    mod fock {}
    #[doc = include_str!("../../../book/src/many_body.md")]
    mod many_body {}
    #[doc = include_str!("../../../book/src/excitations.md")]
    mod excitations {}
    #[doc = include_str!("../../../book/src/bogoliubov.md")]
    mod bogoliubov {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
}
