//! Photon-statistics toolkit for two-emitter Hong-Ou-Mandel interference.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only pure
//! computation:
//!
//! * [`photophys`]: emitter and experiment parameters and the closed-form
//!   two-emitter correlation model, including detector-jitter convolution and
//!   the interference visibility.
//! * [`spectra`]: lineshapes, the four-line zero-phonon-line structure with
//!   thermal populations, etalon filtering and the inhomogeneous distribution.
//! * [`mcsim`]: an event-level Monte Carlo of two emitters, a beamsplitter,
//!   background light and jittery detectors, plus the coincidence correlator.
//! * [`fitkit`]: a damped least-squares engine and the fit recipes built on
//!   top of it.
//!
//! File formats, the command-line interface and multi-threaded drivers live
//! in the `homtk` crate.

#![no_std]
#![deny(missing_docs)]

extern crate alloc;

mod error;
pub mod fitkit;
mod linalg;
pub mod mcsim;
pub mod photophys;
pub mod spectra;
mod units;

pub use self::error::{Error, Result};
pub use self::units::{Frequency, Rate, Time};
