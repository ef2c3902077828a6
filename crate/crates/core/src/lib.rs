//! Periodic orbits, action gaps and normal forms for analytic convex
//! billiards and dual billiards, at arbitrary precision.
//!
//! The crate is organised bottom-up:
//!
//! * [`real`]: MPFR-backed reals and the precision context,
//! * [`curves`]: convex curves from radius-of-curvature Fourier data,
//! * [`billiard`]: inner and outer billiard maps and their generating functions,
//! * [`orbits`]: Birkhoff periodic orbits, action gaps and the graph-pair area,
//! * [`normal_form`]: Fourier–Taylor series algebra and averaging steps,
//! * [`spectra`]: decay fits, boundary asymptotics and coordinate changes.

pub mod billiard;
pub mod curves;
pub mod error;
pub mod normal_form;
pub mod orbits;
pub mod quadrature;
pub mod real;
pub mod spectra;

pub use curves::FourierCurve;
pub use error::{Error, Result};
pub use real::{Complex, Real, RealContext};
