//! Phasor-domain power-system transient simulation with complex-frequency
//! coherency control for grid-following inverter-based resources.
//!
//! The crate is `no_std` (with `alloc`). It contains the network model and
//! power flow, synchronous machine and controller models, the converter and
//! coherency controller, the measurement chain (complex-frequency estimation,
//! delays, Ornstein–Uhlenbeck noise) and the implicit trapezoidal DAE engine.
//! File formats, the built-in test systems and the command line live in the
//! `cohsim` companion crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod converter;
pub mod engine;
mod error;
pub mod linalg;
pub mod machines;
pub mod netcore;
pub mod phasor;
pub mod scenario;
pub mod signals;

pub use error::{Error, Result};
pub use phasor::Phasor;
