//! Simulation core for two coupled oscillators sharing a finite bath.
//!
//! The crate covers exact Hermitian dynamics through a structured
//! eigensolver, peak analysis of head-oscillator eigenstate components, the
//! Markovian non-Hermitian 2x2 reduction (with and without noise), and a
//! mode-sum estimator of the averaged amplitude ratio.
//!
//! Sweeps run on rayon when the `parallel` feature is enabled (the default)
//! and produce identical results either way; see [`par`].

pub mod curve;
pub mod dynamics;
pub mod error;
pub mod estimator;
pub mod model;
pub mod output;
pub mod par;
pub mod reduction;
pub mod spectral;

pub use error::{Error, Result};
pub use model::{derive_constants, DerivedConstants, InitialState, SystemParams};
pub use par::Execution;
pub use spectral::{build_matrix, diagonalize, EigenBasis, Eigensolver, Head};
