//! Simulator and analysis toolkit for nonlocal ergotropy transfer over a
//! surface-code strip: geometry construction, noisy syndrome sampling,
//! minimum-weight perfect-matching decoding, the thermodynamic ledger, and
//! the Monte Carlo experiment sweeps built on top of them.

pub mod decoder;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod noise;
pub mod protocol;
pub mod rngstream;
pub mod stats;
pub mod thermo;

pub use error::{Error, Result};
