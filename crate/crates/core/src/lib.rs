//! Dynamical invariants, holonomies and noncyclic geometric phases of
//! time-dependent quantum systems.

pub mod adiabatic;
pub mod curve;
pub mod error;
pub mod exec;
pub mod gauge;
pub mod linalg;
pub mod phase;
pub mod propagate;
pub mod quadrupole;
pub mod study;

pub use error::{Error, Result};
