//! Length-of-stay and referral-type prediction feeding a discrete-event
//! simulation of post-discharge referral processing.

// NaN-rejecting `!(x >= 0.0)` checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod ingest;
pub mod learn;
pub mod sim;
pub mod stats;
pub mod util;

pub use error::{Error, Result};
