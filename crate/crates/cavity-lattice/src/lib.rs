//! Semiclassical dynamics of a linear array of coupled optical cavities, each
//! containing a collective ensemble of two-level emitters.
//!
//! The ensemble in every cavity is treated as one bosonic mode through the
//! Holstein–Primakoff mapping, truncated at a configurable order.  The crate
//! provides
//!
//! * [`model`] — physical parameters, the truncated Holstein–Primakoff series,
//!   the classical energy functional and the equations of motion,
//! * [`dynamics`] — conservative Runge–Kutta integration with energy/norm and
//!   Holstein–Primakoff validity monitoring,
//! * [`analysis`] — closed-form dispersion branches, envelope-equation
//!   coefficients, the bright-soliton solution, and numerical estimators
//!   (spectral peaks, packet moments, sech fits),
//! * [`initcond`] — builders for plane waves, Gaussian packets, and soliton
//!   launch states with branch-consistent ensemble seeding.
//!
//! The crate is `no_std` (it only needs `alloc`); file IO, the experiment
//! runner, and the exact quantum reference live in the companion `cavity-lab`
//! crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod analysis;
pub mod dynamics;
pub mod initcond;
pub mod model;

pub use num_complex::Complex64;
