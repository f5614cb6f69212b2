//! Numerical laboratory for the relativity-symmetry picture of quantum
//! mechanics.
//!
//! The crate is organized bottom-up:
//!
//! * [`algebra`] - structure constants of the Galilei and Heisenberg-Weyl
//!   algebras and their contraction family.
//! * [`coset`] - finite and infinitesimal group actions on the space-time,
//!   configuration and phase-space cosets.
//! * [`fock`] - truncated Fock-space realizations of the generators.
//! * [`coherent`] - displacement operators, coherent states, overlap kernels
//!   and the position-translation representation on a grid.
//! * [`projective`] - Schrödinger flow and its Hamiltonian form in real
//!   Fock-basis coordinates.
//! * [`contraction`] - the hbar -> 0 sweeps.
//!
//! Inner loops over label grids, hbar grids and random samples run through
//! [`exec`], which uses rayon when the `parallel` feature is enabled and
//! falls back to plain iteration otherwise.

pub mod algebra;
pub mod coherent;
pub mod contraction;
pub mod coset;
pub mod csv;
mod error;
pub mod exec;
pub mod fock;
pub mod grid;
pub mod linalg;
pub mod projective;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Absolute tolerance used for identities that hold exactly in exact
/// arithmetic (structure constants, group laws).
pub const EXACT_TOL: f64 = 1e-12;
