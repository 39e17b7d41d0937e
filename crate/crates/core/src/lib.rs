//! Pseudo-spectral solver for the 2D inviscid Boussinesq equations on the
//! torus, with diagnostics for the radius of spatial analyticity and
//! executable forms of the Sobolev, derivative-cascade and radius bounds.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the
//! experiment harness works in `f64` through the aliases below.

pub mod analyticity;
pub mod bounds;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod scalar;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::Real;
pub use spectral::MultiIndex;

pub type Grid = spectral::Grid<f64>;
pub type SpectralField = spectral::SpectralField<f64>;
pub type FlowState = dynamics::FlowState<f64>;
pub type StepControl = dynamics::StepControl<f64>;
pub type RadiusEstimate = analyticity::RadiusEstimate<f64>;
pub type IntegrandSeries = bounds::IntegrandSeries<f64>;
pub type BoundParams = bounds::BoundParams<f64>;
pub type DiagnosticsRecord = diagnostics::DiagnosticsRecord<f64>;

pub use rustfft::num_complex::Complex;
