pub mod aero;
pub mod bench;
pub mod chassis;
pub mod closed_loop;
pub mod driveline;
pub mod error;
pub mod generate;
pub mod integrator;
pub mod metrics;
pub mod tire;
pub mod track;
pub mod vehicle;

pub use error::{SimError, SimResult};
