//! Operational surface around [`votesim_core`]: JSON scenario files, CSV
//! trajectory/metrics/dataset formats, the multi-seed batch runner, parameter
//! sweeps and forecast reports.

pub mod batch;
pub mod error;
pub mod formats;
pub mod report;
pub mod scenario;
pub mod sweep;

pub use error::{Error, Result};
pub use scenario::Scenario;
