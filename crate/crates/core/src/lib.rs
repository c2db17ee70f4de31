//! Minimum-rate capacity regions of fading Gaussian multiple-access channels
//! with energy-harvesting transmitters and an energy-harvesting receiver.
//!
//! Energies are joules per slot throughout; rates are bits per channel use.

// `!(x > 0.0)` is used on purpose to reject NaN along with bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod commands;
pub mod config;
pub mod error;
pub mod fading;
pub mod optimizer;
pub mod oracle;
pub mod output;
pub mod plot;
pub mod region;
pub mod simulator;
pub mod validate;

pub use error::{Error, Result};
