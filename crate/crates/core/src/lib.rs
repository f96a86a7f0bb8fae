//! Simulation of a silicon microring time-delay reservoir computer with
//! delayed optical feedback: cavity dynamics, input pipeline, ridge readout,
//! benchmark tasks, memory capacity and parameter sweeps.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod cavity;
pub mod error;
pub mod experiment;
pub mod feedback;
pub mod params;
pub mod pipeline;
pub mod readout;
pub mod sweep;
pub mod tasks;

pub use capacity::{CapacityConfig, CapacityReport};
pub use cavity::{CavityState, DetuningTrace, PortFields};
pub use error::{Error, Result};
pub use experiment::{OperatingPoint, ReadoutOptions, ReservoirSetup};
pub use params::{CavityConfig, PhysicalParams};
pub use pipeline::{Mask, MaskRange, StateMatrix};
pub use readout::ReadoutModel;
pub use sweep::{Region, SweepConfig, SweepGrid, SweepResult, TaskKind};
pub use tasks::{ChannelModel, MetricKind, Split, TaskDataset};
