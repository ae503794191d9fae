//! Numerical realization of fractional-order Dirichlet theory on the
//! interval (-1, 1) and a half-line window: homogeneous and nonhomogeneous
//! local Dirichlet solves in a boundary-weighted polynomial basis,
//! resolvents and eigenpairs with sector certificates, order-reducing
//! operators on the half-line, weighted boundary traces and liftings,
//! fractional heat evolution, and independent verifiers for the structural
//! constants (the halfways Green constant and the Holder embedding).

pub mod domain;
pub mod error;
pub mod linalg;
pub mod params;
pub mod quad;
pub mod symbols;
pub mod verify;
pub mod halfline;
pub mod fracop;
pub mod basis;
pub mod solver;
pub mod traces;
pub mod nonhom;

pub use error::{FracError, Result};
