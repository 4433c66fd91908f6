//! Bound states of two multilevel emitters coupled to a one-dimensional
//! waveguide: resonant and below-threshold modes, Fock-space entanglement of
//! the emitters, and a discretized-Hamiltonian oracle.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod fock;
pub mod model;
pub mod numfmt;
pub mod quad;
pub mod roots;
pub mod spectral;

pub use error::{Error, Result};
pub use model::{make_rectangular_model, validate_assumptions, EmitterConfig, WaveguideModel};
pub use spectral::{Parity, SingleExcitationMode, SpectralOptions};
