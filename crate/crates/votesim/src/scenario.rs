//! Scenario files: one JSON document per experiment.
//!
//! ```json
//! {
//!   "label": "friends",
//!   "sim": { "n": 500, "k": 1, "v": 3, "f": 20, "friend_prob": 0.4, "seed": 1 },
//!   "replications": 30
//! }
//! ```
//!
//! Omitted `sim` fields take the [`SimConfig`] defaults. Replication `i` runs
//! with seed `sim.seed + i`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use votesim_core::SimConfig;

use crate::{Error, Result};

/// Artifacts written per replication.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default = "yes")]
    pub trajectory_csv: bool,
    #[serde(default = "yes")]
    pub metrics_csv: bool,
    #[serde(default = "yes")]
    pub summary_json: bool,
}

fn yes() -> bool {
    true
}

fn one() -> usize {
    1
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs { trajectory_csv: true, metrics_csv: true, summary_json: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub label: String,
    pub sim: SimConfig,
    #[serde(default = "one")]
    pub replications: usize,
    #[serde(default)]
    pub outputs: Outputs,
    /// Ticks ignored by steady-state statistics; defaults to 10% of
    /// `max_ticks`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
}

impl Scenario {
    pub fn new(label: impl Into<String>, sim: SimConfig, replications: usize) -> Self {
        Scenario { label: label.into(), sim, replications, outputs: Outputs::default(), burn_in: None }
    }

    /// Parses and validates a scenario document.
    pub fn from_json(text: &str) -> Result<Self> {
        let scenario: Scenario = serde_json::from_str(text).map_err(|e| Error::Validation(format!("scenario: {e}")))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Validation(msg) => Error::Validation(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Field-level validation; messages name the offending field.
    pub fn validate(&self) -> Result<()> {
        if let Err(votesim_core::Error::InvalidConfig { field, reason }) = self.sim.validate() {
            return Err(Error::Validation(format!("sim.{field}: {reason}")));
        }
        if self.replications == 0 {
            return Err(Error::Validation("replications: must be at least 1".into()));
        }
        if let Some(b) = self.burn_in {
            if b >= self.sim.max_ticks {
                return Err(Error::Validation(format!(
                    "burn_in: must be below sim.max_ticks = {}",
                    self.sim.max_ticks
                )));
            }
        }
        Ok(())
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in.unwrap_or(self.sim.max_ticks / 10)
    }

    /// Seeds of all replications, in order.
    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.replications as u64).map(|i| self.sim.seed.wrapping_add(i))
    }

    /// Config of replication `i`.
    pub fn replication(&self, i: usize) -> SimConfig {
        SimConfig { seed: self.sim.seed.wrapping_add(i as u64), ..self.sim.clone() }
    }
}
