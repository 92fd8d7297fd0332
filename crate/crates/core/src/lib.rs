//! Simulation and estimation toolkit for time-of-flight (TOF) force sensing
//! with a levitated nanoparticle.
//!
//! The toolkit covers the full squeeze–release–recapture measurement chain:
//!
//! * [`phasespace`] — closed-form Gaussian dynamics of the z-axis
//!   center-of-mass mode through state preparation, free expansion, and
//!   recapture, including gravity and background-gas heating.
//! * [`fockstate`] — density matrices in a truncated Fock basis, quadrature
//!   projectors, Wigner functions, and moment extraction.
//! * [`synthlab`] — synthetic experiment generator: per-shot outcomes,
//!   phase-resolved sinograms, and long force time series.
//! * [`tomomle`] — maximum-likelihood state reconstruction from binned
//!   homodyne sinograms via the diluted iterative algorithm.
//! * [`gaussfit`] — Gaussian-ansatz estimation of the phase-space
//!   distribution, G-test validation, and MCMC uncertainty quantification.
//! * [`inference`] — Fisher-information sensitivity analysis, classical
//!   fits, and Allan deviation.
//!
//! All physical quantities are strict SI internally; dimensionless
//! (zero-point-normalized) quadratures appear only at the [`fockstate`]
//! boundary and in everything downstream of it.

pub mod config;
pub mod consts;
pub mod fockstate;
pub mod gaussfit;
pub mod hermitian;
pub mod inference;
pub mod io;
pub mod optim;
pub mod oracle;
pub mod phasespace;
pub mod rng;
pub mod special;
pub mod stats;
pub mod synthlab;
pub mod tomomle;

pub use config::ProtocolConfig;
pub use fockstate::DensityMatrix;
pub use phasespace::{AffineMap, Cov2, GaussianState};
pub use synthlab::Sinogram;
