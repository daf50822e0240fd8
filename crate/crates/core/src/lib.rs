//! Finite-level quantum systems in Strocchi phase space.
//!
//! A state `ψ = q + ip` is a point of a classical phase space; Schrödinger
//! evolution is Hamiltonian flow, measurement is a jump (or, for continuous
//! observation, damping of coherences). On top of that the crate offers
//! controllability analysis, "measurement plus evolution" steering, kick
//! planning on the momentum lattice of a torus and Pontryagin optimal control.

pub mod dynamics;
pub mod cli;
pub mod controllability;
pub mod error;
pub mod kahler;
pub mod linalg;
pub mod measurement;
pub mod numeric;
pub mod pontryagin;
pub mod rng;
pub mod steering;
pub mod three_level;
pub mod torus;

pub use error::{Error, ErrorClass, Result};
