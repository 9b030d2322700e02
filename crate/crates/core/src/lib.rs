//! Impedance-domain simulator for RIS-aided links with mutually coupled
//! reflecting elements.
//!
//! The crate is organised around the end-to-end channel
//! `Z = Z_DS - Z_DR (Z_R + j diag(x))^-1 Z_RS`:
//!
//! * [`channel`] builds the impedance blocks (coupling matrix, LOS steering
//!   vectors) and evaluates the channel and its figures of merit.
//! * [`elementwise`] maximizes channel gain or spectral efficiency one
//!   reactance at a time, keeping the loading inverse current with rank-one
//!   updates so a full sweep costs `O(N^3)`.
//! * [`decoupling`] synthesizes the lossless power-matching network that
//!   makes the coupled array look uncoupled, solves the SISO gain in closed
//!   form and evaluates array gains.
//! * [`baselines`] holds the reference methods used for comparison and as
//!   test oracles.
//! * [`experiment`] parses sweep configurations, runs them and writes CSV.

pub mod baselines;
pub mod channel;
pub mod decoupling;
pub mod elementwise;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod selftest;

pub use error::{Error, Result};

pub use num_complex::Complex64;

/// Dense complex matrix used for all impedance blocks.
pub type CMatrix = nalgebra::DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<Complex64>;
/// Dense real matrix (normalized coupling, matrix roots).
pub type RMatrix = nalgebra::DMatrix<f64>;
/// Dense real vector (reactances).
pub type RVector = nalgebra::DVector<f64>;
