//! Simulation and analysis of Doppler-free "butterfly" four-wave-mixing
//! photon-pair sources.
//!
//! Atoms cycle `|1⟩ → |2⟩ → |3⟩ → |4⟩ → |1⟩`: a weak multiphoton drive
//! excites `|2⟩`, which emits a signal photon into a random direction `k`;
//! a strong coupler with opposite net momentum moves the atom to `|4⟩`, and
//! the idler photon is emitted collectively into `−k`. The crate integrates
//! the collective-mode rate equations over the whole emission sphere and
//! derives pair rates, atom loss, cross-correlations and polarization
//! entanglement from the result.
//!
//! * [`geometry`]: collective mode grid and enhancement factors.
//! * [`dynamics`]: rate equations, integration, steady state, rates.
//! * [`correlations`]: `g²(k, −k, τ)`, peak width, Cauchy–Schwarz factor.
//! * [`polarization`]: circular-polarization probabilities and Bell fidelity.
//! * [`schemes`]: the six-laser silver scheme and regime checks.
//! * [`config`] / [`run`]: configuration files, presets and experiment drivers.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod correlations;
pub mod dynamics;
mod error;
pub mod geometry;
pub mod ode;
pub mod polarization;
pub mod reduce;
pub mod report;
pub mod run;
pub mod schemes;

pub use error::{Error, Result};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/ch1-geometry.md")]
pub mod chapter1 {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/ch2-dynamics.md")]
pub mod chapter2 {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/ch3-correlations.md")]
pub mod chapter3 {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/ch4-polarization.md")]
pub mod chapter4 {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/ch5-silver.md")]
pub mod chapter5 {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/ch6-cli.md")]
pub mod chapter6 {}
