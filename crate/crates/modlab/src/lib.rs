//! Numerical toolkit for weighted modulation spaces and the pointwise
//! convergence of heat, Poisson and Hermite semigroups.
//!
//! Everything works on uniform grids of `[-L, L)^n`, `n ∈ {1, 2}`. The
//! modules build on each other bottom-up: [`grid`] (sampling, Fourier
//! transform, convolution), [`stft`], [`modnorm`], [`kernels`], [`hermite`],
//! [`maximal`] and [`convergence`]. [`verify`] bundles the identity checks
//! used by the command-line `verify` subcommand.

pub mod convergence;
pub mod descriptor;
pub mod error;
mod fft;
pub mod grid;
pub mod hermite;
pub mod kernels;
pub mod maximal;
pub mod modnorm;
pub mod numeric;
pub mod quadrature;
pub mod stft;
pub mod verify;

pub use descriptor::{sample, FunctionDescriptor};
pub use error::{Error, Result};
pub use grid::{Grid, Offset, SampledFunction};
pub use modnorm::{Exponent, MixedNormParams, Weight};
pub use stft::PhaseSpaceFunction;
