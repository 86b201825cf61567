//! Lattice laboratory for classical gauge fields of volume-preserving
//! diffeomorphisms of an inner D-dimensional torus.

pub mod algebra;
pub mod error;
pub mod hamiltonian;
pub mod harness;
pub mod lagrangian;
pub mod lattice;
pub mod matter;

pub use error::{IsoError, Result};
pub use lattice::{AlgebraField, LatticeSpec, ScalarField};
