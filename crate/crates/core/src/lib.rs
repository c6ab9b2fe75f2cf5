//! Simulation of a programmable multi-ring frequency-bin entangled-photon
//! source: pair generation, electro-optic bin mixing, coincidence statistics,
//! two-photon interference and maximum-likelihood state tomography.

pub mod binops;
pub mod config;
pub mod correlate;
pub mod error;
pub mod io;
pub mod pairgen;
pub mod qudit;
pub mod rng;
pub mod special;
pub mod spectra;
pub mod state;
pub mod tomo;

pub use error::{Error, Result};
