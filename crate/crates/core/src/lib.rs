//! Noise-aware quantum circuit search for small machine-learning tasks.
//!
//! The pipeline generates device-matched candidate circuits, screens them
//! for noise robustness with Clifford replicas simulated on a stabilizer
//! tableau, ranks survivors with a training-free representational-capacity
//! score, and trains the winner with the parameter-shift rule. All execution
//! happens on the in-crate simulators.

pub mod cnr;
pub mod data;
pub mod error;
pub mod generate;
pub mod model;
pub mod noise;
pub mod repcap;
pub mod search;
pub mod seed;
pub mod stabilizer;
pub mod stats;
pub mod statevector;
pub mod train;

pub use error::{Error, Result};
