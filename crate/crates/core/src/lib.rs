//! Numerical toolkit for Orlicz modulation spaces on periodic grids.
//!
//! The crate provides quasi-Young functions and their Lebesgue exponents
//! ([`young`]), sampled fields with a unitary centered Fourier transform
//! ([`field`]), short-time Fourier transforms ([`tfa`]), Luxemburg, mixed
//! and amalgam quasi-norms ([`norms`]), Fourier multipliers with Mihlin and
//! Hörmander functionals ([`multiplier`]) and a harness that measures both
//! sides of identities and inequalities between these objects ([`verify`]).

// `!(x > 0.0)` style guards are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod field;
pub mod io;
pub mod multiplier;
pub mod norms;
pub mod tfa;
pub mod verify;
pub mod young;

pub use error::{Error, Result};
pub use field::{Grid, SampledField};
pub use multiplier::{Cutoff, MultiplierSymbol};
pub use norms::{NormSpec, OrderFlag};
pub use tfa::TimeFrequencyField;
pub use young::{LebesgueExponents, QuasiYoungFunction, YoungFamily};

pub use num_complex::Complex64;
