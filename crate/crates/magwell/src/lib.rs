//! Tunneling splitting for the magnetic Laplacian (−ih∇ − A)² in the plane
//! with two symmetric radial magnetic wells.
//!
//! The crate computes the interaction coefficient w_h, whose modulus is half
//! the gap λ₂ − λ₁, along three independent routes and cross-checks them:
//!
//! * [`interaction::wh_direct`] integrates the one-well ground state over the
//!   symmetry axis;
//! * [`interaction::wh_from_integral`] rescales the exact Kummer representation
//!   of the eigenfunction into a three-dimensional integral;
//! * [`asymptotics`] evaluates the closed-form leading term.
//!
//! ```
//! use magwell::profile::{MagneticProfile, WellGeometry, FluxData};
//!
//! let profile = MagneticProfile::builtin(1.0, 2.0, 1.0, 1.0)?;
//! let geometry = WellGeometry::new(5.0, &profile)?;
//! let flux = FluxData::new(&profile, &geometry)?;
//! assert!(flux.m < 0.0 && flux.n > 0.0 && flux.n < 1.0);
//! # Ok::<(), magwell::Error>(())
//! ```

// Parameter checks are written !(x > 0.0) so that NaN is rejected as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod config;
pub mod error;
pub mod grid2d;
pub mod interaction;
pub mod kummer;
pub mod logspace;
pub mod profile;
pub mod quad;
pub mod radial;
pub mod report;
pub mod verify;
pub mod wkb;

pub use error::{Error, Result};
