//! Hybrid-qubit (polarization photon ⊗ coherent state) teleportation toolkit.
//!
//! The crate pairs an exact truncated-Fock-space simulator ([`fock`]) with
//! closed-form models of the hybrid qubit, its Bell-type measurements,
//! teleportation, resource-channel generation, photon-loss errors, resource
//! accounting and a Pauli-frame Monte Carlo estimate of fault-tolerance
//! thresholds over the 7-qubit Steane code.

pub mod bell;
pub mod channels;
pub mod error;
pub mod fock;
pub mod loss;
pub mod par;
pub mod qubit;
pub mod register;
pub mod resources;
pub mod steane;
pub mod teleport;
pub mod threshold;

pub use error::{Error, Result};
