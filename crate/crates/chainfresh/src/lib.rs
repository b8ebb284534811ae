//! Freshness metrics for blockchain-backed monitoring networks.
//!
//! A remote source generates status updates as a Poisson process; each update
//! crosses a noisy uplink (succeeding with a tunable probability), takes a
//! fixed transmission latency, then waits a Gamma-distributed consensus
//! latency before the ledger commits it. Stale arrivals are discarded by a
//! version check. This crate computes the resulting age-of-information
//! metrics both in closed form and by Monte Carlo simulation:
//!
//! * [`channel`]: uplink success probability, achievable rate, transmission
//!   latency.
//! * [`latency`]: consensus-latency Gamma model, MLE fitting, KS validation,
//!   benchmark parameter tables.
//! * [`numerics`] / [`quad`]: the special functions and quadrature the closed
//!   forms need.
//! * [`aoi`]: average age, age-violation and peak-age-violation
//!   probabilities.
//! * [`sim`]: event-level simulator used as an independent oracle.

pub mod aoi;
pub mod channel;
mod dd;
pub mod error;
pub mod latency;
pub mod numerics;
pub mod quad;
pub mod sim;

pub use error::{Error, Result};
