//! Resource estimation for single-ancilla phase estimation driven by
//! partially randomized second-order product formulas.
//!
//! The pipeline runs from electronic integrals to a Pauli coefficient
//! table, through spectrum-preserving transforms that concentrate weight
//! into few terms, to logical gate counts and physical resources on an
//! early fault-tolerant architecture. A statevector-level simulator covers
//! the phase-estimation loop itself at desk scale.

pub mod costmodel;
pub mod error;
pub mod integrals;
pub mod pauli_lcu;
mod par;
pub mod rpesim;
pub mod smm;
pub mod transforms;
pub mod uwc;

pub use error::{Error, Result};
