//! Simulator for polarisation symmetry breaking in a dye-filled microcavity
//! photon condensate, and its use as a readout of enantiomeric excess.
//!
//! The pipeline runs from a chiral sample to a Stokes parameter:
//! [`chiral`] turns a solute description into split refractive indices,
//! [`cavity`] builds the polarised mode ladder, [`dye`] tabulates emission and
//! absorption rates, [`dynamics`] solves the rate equations to steady state
//! and [`observables`] / [`sweep`] evaluate S3 over parameter grids.

pub mod analytic;
pub mod cavity;
pub mod chiral;
pub mod config;
pub mod constants;
pub mod dye;
pub mod dynamics;
pub mod error;
pub mod numeric;
pub mod observables;
pub mod output;
pub mod selftest;
pub mod sensitivity;
pub mod setup;
pub mod sweep;

pub use error::{Error, Result};

/// Crate version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
