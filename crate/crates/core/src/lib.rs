//! Exact Hopf-algebra invariants of Kirby diagrams.
//!
//! The crate is layered bottom-up: [`cyclo`] scalars, the generic
//! finite-dimensional Hopf layer in [`hopf`], two concrete algebras
//! ([`uqsl2`] and [`grpalg`]), the center calculus in [`center`], the
//! diagram model in [`kirby`] and the diagram evaluation in [`hkr`].

pub mod center;
pub mod cyclo;
pub mod grpalg;
pub mod hkr;
pub mod hopf;
pub mod kirby;
pub mod linalg;
pub mod uqsl2;

pub use cyclo::CycNum;
pub use hopf::{AlgElem, HopfData, TensorElem};
