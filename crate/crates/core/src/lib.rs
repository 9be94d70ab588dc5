//! Variational quantum-annealing dynamics.
//!
//! This crate simulates annealing protocols `H(s) = (1-s) H0 + s H1 + s(1-s) H2`
//! three ways:
//!
//! * exactly, on the full Hilbert space ([`exact`]),
//! * constrained to two-parameter product-state manifolds ([`product`]), with
//!   the linearized flow around the instantaneous variational ground state
//!   available through [`linearization`],
//! * constrained to matrix product states of fixed bond dimension, with an
//!   inverse-free single-site TDVP integrator and DMRG ([`mps`]).
//!
//! Model Hamiltonians (two-qubit, bipartite, LMG and fully connected Ising
//! spin glass) live in [`models`].
//!
//! The crate is `no_std` and only needs `alloc`. File formats, CLI and
//! parallel sweeps live in the `varanneal` companion crate.

#![no_std]
// std's inherent float methods shadow `num_traits::Float` whenever std is
// linked into the build (tests, or dependents that enable it).
#![allow(unused_imports)]

extern crate alloc;

pub mod error;
pub mod exact;
pub mod linalg;
pub mod linearization;
pub mod models;
pub mod mps;
pub mod product;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Tolerance used to decide whether two eigenvalues belong to the same level.
pub const DEGENERACY_TOL: f64 = 1e-9;
