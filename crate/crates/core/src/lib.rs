//! Deterministic simulation of low-orbit constellations interfering with
//! geostationary downlinks.
//!
//! The crate propagates both constellations, evaluates the victim carrier
//! and every visible interferer through a ground-station antenna pattern at
//! each time step, and reduces the resulting SINR series to jamming
//! statistics.

pub mod analysis;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod io;
pub mod orbit;
pub mod rfmodel;
pub mod vec3;

pub use engine::{run_scenario, Combiner, Constellation, Scenario, SinrSeries, StepRecord};
pub use error::{Error, Result};
