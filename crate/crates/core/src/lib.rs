//! Simulation and analysis of two-frequency dispersive detection of
//! magnetically trapped atoms.
//!
//! The crate models the full measurement chain of a heterodyne probe:
//!
//! * [`atomics`] — line strengths, Zeeman shifts and decay branching for the
//!   relevant Zeeman sublevels,
//! * [`response`] — dispersive phase shift and attenuation of the two
//!   frequency components, and the per-atom quantities derived from them,
//! * [`photodetect`] — stochastic model of the avalanche photodetector and
//!   phase-sensitive demodulation,
//! * [`cloudsim`] — trapped thermal cloud geometry and centre-of-mass motion,
//! * [`losses`] — optical-pumping loss rate equations and multi-pulse
//!   survival,
//! * [`merit`] — the detection figure of merit and its optimisation,
//! * [`estimators`] — nonlinear least-squares recovery of physical
//!   parameters from (simulated) data.
//!
//! All frequencies are ordinary frequencies in Hz (never angular) and all
//! lengths are in metres unless a name says otherwise.

pub mod atomics;
pub mod cloudsim;
pub mod constants;
pub mod estimators;
pub mod losses;
pub mod merit;
pub mod photodetect;
pub mod response;
pub mod rng;

mod error;

pub use error::{Error, Result};
