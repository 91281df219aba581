//! Simulation core for true-time-delay (TTD) uniform-linear-array receivers.
//!
//! A TTD array applies a per-element time delay (not just a phase shift) before
//! combining. Two delay designs matter here:
//!
//! * **Beam training**: taps `tau_n = (n-1)/BW` make the combined gain peak at a
//!   frequency offset `nu* = BW*sin(theta)/2` that is unique per incidence angle,
//!   so one wideband pilot sounds every direction at once.
//! * **Communications**: taps `tau_n = (n-1)*d*sin(theta)/c` align all frequency
//!   components toward a known direction, removing beam squint over the band.
//!
//! The crate is split into the closed-form array math ([`array_model`]), DSP
//! primitives ([`signal_core`]), pilot/data waveforms ([`waveform`]), a geometric
//! line-of-sight channel ([`channel`]), a behavioral device model ([`ttd_engine`]),
//! the angle estimators ([`beam_training`]), and link metrics ([`metrics`]).
//!
//! Everything is pure value-in/value-out; randomness is confined to explicit
//! seeds. The crate builds without `std` (with `alloc`) when the default `std`
//! feature is disabled.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod array_model;
pub mod beam_training;
pub mod channel;
pub mod metrics;
pub mod signal_core;
pub mod ttd_engine;
pub mod waveform;

mod error;

pub use error::{Error, Result};

pub use num_complex::Complex64;
