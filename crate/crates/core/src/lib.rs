//! Simulation of a two-state particle detector driven by the probability that
//! a freely propagating wave packet has entered the detector volume.
//!
//! The pipeline runs from a point source through detector-entry
//! probabilities ([`probability`]) to the detector dynamics ([`detector`]) and
//! the arrival-time statistics of a point detector ([`arrival`]). Units are
//! natural (ħ = 1), with kinetic energy p²/2m.

pub mod arrival;
pub mod detector;
pub mod error;
pub mod geometry;
pub mod oracle;
pub mod probability;
pub mod quadrature;
pub mod wavepacket;

pub use error::{Error, Result};

/// Three-vector used for positions, directions and momenta.
pub type Vec3 = nalgebra::Vector3<f64>;

pub use num_complex::Complex64;
