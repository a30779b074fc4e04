//! Mean-field and exact-diagonalization solvers for a transverse-field Ising
//! chain coupled to a single cavity mode.
//!
//! Units: all energies in the same units as the cavity frequency `Omega`.

pub mod ed;
pub mod equilibrium;
pub mod error;
pub mod model;
pub mod oracle;
pub mod par;
pub mod response;

pub use error::{Error, Result};
pub use model::ModelParams;
