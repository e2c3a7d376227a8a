//! Online forecasting of external-marker trajectories.
//!
//! The crate bundles a vanilla RNN trained online either with unbiased online
//! recurrent optimization ([`uoro`]) or exact real-time recurrent learning
//! ([`rtrl`]), linear baselines ([`baselines`]), the forecasting metric suite
//! ([`metrics`]) and an experiment harness ([`harness`]) that runs grid-search
//! cross-validation and multi-run evaluation over marker recordings.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod rnn;
pub mod rtrl;
pub mod signal;
pub mod uoro;

pub use error::{Error, Result};
