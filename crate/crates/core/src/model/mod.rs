//! Shared domain types: gates, circuits, device calibration, distributions,
//! datasets and run configuration.

mod circuit;
mod config;
mod dataset;
mod device;
mod dist;
mod gate;

pub use circuit::{validate_circuit, Circuit, CircuitBuilder, Violation};
pub use config::{RejectionRule, RunConfig, Shots};
pub use dataset::{Dataset, Sample};
pub use device::{DeviceModel, EdgeCalibration, QubitCalibration, SyntheticCalibration, Topology};
pub use dist::{tvd, ProbDist};
pub use gate::{Gate, GateKind, ParamRole};
