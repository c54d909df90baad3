//! Link-level simulator for bistatic OFDM integrated sensing and communication.
//!
//! A transmitter fills an OFDM frame with coded data. Low-order symbols are
//! placed as pseudo-pilots on a regular sensing grid, and the remaining
//! resource elements carry higher-order symbols. A separate sensing receiver
//! decodes the frame, rebuilds the transmitted symbols, divides them out of
//! the received frame and forms a range-Doppler periodogram from the
//! resulting channel estimate.
//!
//! The crate is organised along that chain:
//!
//! - [`planner`]: sensing-grid spacings, burst dimensions, spectral efficiency
//!   and the resource-element classification map.
//! - [`modem`]: Gray-labelled QPSK/16-QAM, exact and max-log LLRs, grid mapping.
//! - [`fec`]: quasi-cyclic LDPC code, systematic encoder, belief propagation.
//! - [`channel`]: multipath frequency response, AWGN, random scenarios.
//! - [`pipeline`]: one frame end to end for each allocation mode.
//! - [`radar`]: periodogram, CA-CFAR, detection matching, target SNR.
//! - [`harness`]: configuration, seeded Monte Carlo sweeps, CSV/JSON output.

// Parameter checks are written as `!(x > 0.0)` on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod fec;
pub mod grid;
pub mod harness;
pub mod modem;
pub mod pipeline;
pub mod planner;
pub mod radar;
pub mod selfcheck;

pub use error::{Error, Result};
pub use grid::FrameGrid;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
