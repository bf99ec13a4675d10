//! Simulation of one-way quantum computing on a photonic AKLT wire: state
//! construction, qutrit measurements with Pauli-frame corrections, the
//! linear-optics analyser model, and maximum-likelihood tomography.

// `!(x >= tol)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod error;
pub mod io;
pub mod mbqc;
pub mod optics;
pub mod quantum;
pub mod tomography;

pub use error::{Error, Result};
