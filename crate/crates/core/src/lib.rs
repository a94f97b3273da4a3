//! Link-level simulation of 1-layer rate-splitting multiple access (RSMA)
//! downlink.
//!
//! A base station with `Nt` antennas superposes one common stream and `K`
//! private streams through a linear precoder. Each single-antenna user
//! recovers the common stream and its own private stream with one of three
//! receivers:
//!
//! * [`receivers::MapDetector`], joint minimum-distance detection with perfect
//!   channel knowledge;
//! * [`receivers::SicDetector`], successive interference cancellation with
//!   perfect or estimated channel knowledge;
//! * [`receivers::MbdlReceiver`], two banks of compact row/column classifying
//!   networks trained on a short known-symbol prefix, needing no channel
//!   knowledge at all.
//!
//! The [`training`] module builds the extensive, minimal and interpolating
//! training patterns, and [`harness`] runs seeded Monte Carlo SER sweeps and
//! writes CSV/JSON reports.

// `!(x > 0.0)` is how NaN gets rejected; index loops mirror the math
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod channel;
pub mod error;
pub mod harness;
pub mod modem;
pub mod nn;
pub mod precoding;
pub mod receivers;
pub mod training;

pub use error::{Error, Result};

/// Complex baseband sample type used throughout.
pub type C64 = num_complex::Complex64;
