//! Monte Carlo model of a deterministic entanglement-based QKD scheme
//! (ping-pong coding) with polarization-entangled photon pairs.
//!
//! The crate is organized along the signal chain:
//!
//! - [`quantum`]: two-qubit polarization density matrices, Bell states,
//!   the electro-optic encoder, entanglement figures of merit.
//! - [`source`]: pulsed down-conversion pair statistics and detection
//!   efficiencies.
//! - [`bsa`]: the Bell-state analyzer — beam-splitter interference, detour
//!   timing, click generation and signature windows.
//! - [`protocol`]: block framing, majority decoding, outcome categories,
//!   error rates, control mode and the one-time-pad demonstration.
//! - [`adversary`]: eavesdropping models and their detection statistics.
//! - [`rng`]: seeded, stream-splittable randomness for reproducible and
//!   parallelizable runs.

pub mod adversary;
pub mod bsa;
pub mod error;
pub mod protocol;
pub mod quantum;
pub mod rng;
pub mod source;

pub use error::{Error, Result};
