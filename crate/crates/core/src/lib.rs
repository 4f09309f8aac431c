//! Crystal-basis quantum spin-chain model of point mutations.
//!
//! - [`crystal`]: words over {R, Y}, their labels, canonical basis.
//! - [`hamiltonian`]: ladder operators and symbolic Hamiltonian assembly.
//! - [`dynamics`]: exact diagonalization and time-averaged transition probabilities.
//! - [`analysis`]: rank ordering, Yule/Zipf fits and plateaux diagnostics.

pub mod analysis;
pub mod crystal;
pub mod dynamics;
mod eigen;
pub mod error;
pub mod hamiltonian;

pub use error::{CrystalError, Result};
