//! Noise spectroscopy with a two-level probe under repeated projective
//! measurements.
//!
//! A control field drives the probe while an unknown stationary noise field
//! perturbs it. After N measurements spaced by τ the survival probability
//! carries a cross term between control and noise whose variance over
//! realizations is the noise spectrum seen through a filter set by τ.
//! Sweeping τ and inverting the filters recovers the spectrum.
//!
//! * [`protocol`]: parameters, τ grids and the square-wave control.
//! * [`noise`]: spectral models and harmonic-sum realizations.
//! * [`dynamics`]: survival probabilities, factorized and exact.
//! * [`filters`]: filter functions, χ(τ) in theory, overlap matrices.
//! * [`estimator`]: χ from data, spectrum reconstruction, fidelities.
//! * [`experiment`]: config files, seeding and the staged pipeline.

// `!(x > 0.0)` is how parameter checks reject NaN along with bad values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod estimator;
pub mod experiment;
pub mod filters;
pub mod noise;
pub mod protocol;
pub mod quadrature;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/protocol.md")]
    mod protocol {}
    #[doc = include_str!("../../../book/src/noise.md")]
    mod noise {}
    #[doc = include_str!("../../../book/src/dynamics.md")]
    mod dynamics {}
    #[doc = include_str!("../../../book/src/filters.md")]
    mod filters {}
    #[doc = include_str!("../../../book/src/reconstruction.md")]
    mod reconstruction {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
