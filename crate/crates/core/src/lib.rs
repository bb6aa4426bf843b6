//! Caputo-Katugampola fractional calculus, Mittag-Leffler kernels and
//! linearized stability certificates for nonlinear fractional systems.

pub mod dynamics;
pub mod error;
pub mod fraccalc;
pub mod nonlinear;
pub mod perron;
pub mod quadrature;
pub mod specfun;
pub mod spectral;

pub use error::{Error, Result};
pub use fraccalc::{FracOrder, SampledFunction, WGrid};
