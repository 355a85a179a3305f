//! Closed-loop lap simulation: reference lap, sensing, estimation, control.

pub mod controller;
pub mod estimation;
pub mod reference;
pub mod runner;
pub mod sensors;

pub use controller::{lateral_control, longitudinal_control, low_level, ControllerConfig, LateralGains};
pub use estimation::{Estimator, EstimatorConfig};
pub use reference::{scale_velocity_profile, LapSample, ReferenceLap, LAP_HEADER};
pub use runner::{run_closed_loop, LoopConfig, RunOutput, RunResult, Simulation, TickRecord};
pub use sensors::{sense, Measurement, NoiseLevels, SensorConfig};
