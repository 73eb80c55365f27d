use alloc::string::String;

/// Result alias used throughout the crate.
pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Everything that can go wrong in the model, the operators, the metrics and
/// the forecast replay.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A configuration field violates its constraint.
    #[error("invalid `{field}`: {reason}")]
    InvalidConfig {
        /// Name of the offending field.
        field: &'static str,
        /// Human readable constraint.
        reason: String,
    },
    /// An integration operator was handed no votes.
    #[error("vote set is empty")]
    EmptyVotes,
    /// A knowledge value lies outside `0..=k`.
    #[error("value {value} is outside the domain 0..={k}")]
    OutOfDomain {
        /// The offending value.
        value: u32,
        /// Domain bound.
        k: u32,
    },
    /// `friend_prob > 0` but the sender has no friends.
    #[error("agent {agent} has no friends but friend_prob is {friend_prob}")]
    NoFriends {
        /// Sender id.
        agent: usize,
        /// Requested friend probability.
        friend_prob: f64,
    },
    /// The population has a single agent, so there is nobody to talk to.
    #[error("no communication target exists for agent {agent} in a population of {n}")]
    NoTarget {
        /// Sender id.
        agent: usize,
        /// Population size.
        n: usize,
    },
    /// Two sequences that must be aligned have different lengths.
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch {
        /// Expected length.
        expected: usize,
        /// Observed length.
        found: usize,
    },
    /// A tick index beyond the recorded trajectory.
    #[error("tick {tick} is out of range (trajectory has {ticks} ticks)")]
    TickOutOfRange {
        /// Requested tick.
        tick: usize,
        /// Last recorded tick.
        ticks: usize,
    },
    /// The burn-in covers the whole trajectory of a run that never absorbed.
    #[error("burn-in {burn_in} leaves no ticks in a trajectory of {ticks} ticks")]
    BurnInTooLong {
        /// Requested burn-in.
        burn_in: usize,
        /// Recorded ticks.
        ticks: usize,
    },
    /// A forecast day where every source dropped out.
    #[error("day `{day}` has no available source predictions")]
    NoSources {
        /// Day label.
        day: String,
    },
    /// MAE over an empty set of covered days.
    #[error("no overlapping days between predictions and actuals")]
    EmptyOverlap,
    /// A structurally invalid forecast dataset.
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
}
