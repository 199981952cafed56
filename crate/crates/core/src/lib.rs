//! Numerical toolkit for one-dimensional functionals with degenerate weights:
//! nondegenerate-interval detection, the auxiliary weight, weighted pairings,
//! Poincaré checks, relaxed energies with recovery sequences, and
//! Muckenhoupt-type diagnostics.

pub mod cli;
pub mod degeneracy;
pub mod error;
pub mod function;
pub mod hat;
pub mod muckenhoupt;
pub mod pairing;
pub mod poincare;
pub mod relaxation;

pub use error::{Error, Result};
