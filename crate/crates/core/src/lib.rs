//! Simulation of adiabatic (STIRAP-like) transfer and preparation of cavity
//! field states in systems of atoms coupled to several degenerate cavity
//! modes.
//!
//! The numerical core is generic over the real scalar type ([`Real`]); the
//! aliases below fix it to `f64`, which is what the scenario library and the
//! command line use.

pub mod darkstate;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod measure;
pub mod model;
pub mod propagate;
pub mod scalar;
pub mod scenarios;

pub use error::{Error, Result};
pub use scalar::{Real, C};

/// Double-precision state vector.
pub type StateVector64 = fock::StateVector<f64>;
/// Double-precision system description.
pub type SystemSpec64 = model::SystemSpec<f64>;
/// Double-precision pulse.
pub type PulseSpec64 = model::PulseSpec<f64>;
