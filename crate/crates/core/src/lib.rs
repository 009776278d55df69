//! Spectral theory of periodic strictly lower-triangular difference operators
//! and the finite-dimensional reductions of the 2D Toda hierarchy they carry.
//!
//! The crate is organised bottom-up:
//!
//! * [`operator`] holds `L = T^{-k-1} + sum_j a_i^{(j)} T^{-j}` and its data model.
//! * [`spectral`] builds the quasi-periodic matrix `L(w)`, the curve `R(w, E) = 0`
//!   and Bloch eigenvectors.
//! * [`series`] expands Bloch solutions at the two marked points and reads off
//!   the flow invariants.
//! * [`flows`] integrates the two first Lax flows.
//! * [`chart`] and [`symplectic`] give explicit coordinates, symplectic matrices
//!   and Hamiltonians.
//! * [`frame`] parametrizes operators by kernel frames and Floquet multipliers.
//! * [`verify`] runs the seeded property suite used by the `verify` command.

pub mod calibration;
pub mod chart;
pub mod error;
pub mod flows;
pub mod frame;
mod linalg;
pub mod operator;
pub mod power;
pub mod series;
pub mod spectral;
pub mod symplectic;
pub mod verify;

pub use error::{Error, Result};
pub use operator::{FlowTag, LogMode, SampleRange, TriangularOperator};

pub use num_complex::Complex64;
