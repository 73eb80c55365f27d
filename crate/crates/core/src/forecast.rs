//! Layered forecast aggregation.
//!
//! Every source agent starts a day holding its own prediction. Gossiping
//! variants let the sources exchange and integrate predictions with the
//! voting scheduler for a fixed number of ticks; a supervisor then fuses the
//! surviving values into one forecast. Days are independent. Sources missing
//! on a day simply do not take part that day.
//!
//! The evaluation compares the system's MAE against the best, worst and
//! average source. The comparison is the ratio `source_mae / system_mae`,
//! rendered as `"89%"` below one, `"17% better"` above one and `"equal"` when
//! it rounds to 100%.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};

use crate::engine::Simulation;
use crate::integrate::{consensus_value, dominant_value, VoteSet};
use crate::model::{KnowledgeValue, SimConfig, Strategy};
use crate::{Error, Result, SimRng};

/// Historical predictions of several sources together with observed values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForecastDataset {
    days: Vec<String>,
    sources: Vec<String>,
    predictions: Vec<Vec<Option<i32>>>,
    actuals: Vec<i32>,
}

impl ForecastDataset {
    /// `predictions[s][d]` is source `s`'s prediction for day `d`, `None`
    /// when the source dropped out.
    pub fn new(
        days: Vec<String>,
        sources: Vec<String>,
        predictions: Vec<Vec<Option<i32>>>,
        actuals: Vec<i32>,
    ) -> Result<Self> {
        if actuals.len() != days.len() {
            return Err(Error::InvalidDataset(format!("{} days but {} actual values", days.len(), actuals.len())));
        }
        if predictions.len() != sources.len() {
            return Err(Error::InvalidDataset(format!(
                "{} sources but {} prediction rows",
                sources.len(),
                predictions.len()
            )));
        }
        for (name, row) in sources.iter().zip(&predictions) {
            if row.len() != days.len() {
                return Err(Error::InvalidDataset(format!(
                    "source `{name}` has {} entries for {} days",
                    row.len(),
                    days.len()
                )));
            }
            if row.iter().all(Option::is_none) {
                return Err(Error::InvalidDataset(format!("source `{name}` covers no day")));
            }
        }
        Ok(ForecastDataset { days, sources, predictions, actuals })
    }

    /// Day labels in order.
    pub fn days(&self) -> &[String] {
        &self.days
    }

    /// Source names in order.
    pub fn sources(&self) -> &[String] {
        &self.sources
    }

    /// Observed values, one per day.
    pub fn actuals(&self) -> &[i32] {
        &self.actuals
    }

    /// Prediction row of source `s`.
    pub fn source_predictions(&self, s: usize) -> &[Option<i32>] {
        &self.predictions[s]
    }

    /// Predictions available on `day`, in source order.
    pub fn day_predictions(&self, day: usize) -> Vec<i32> {
        self.predictions.iter().filter_map(|row| row[day]).collect()
    }

    /// MAE of every source over the days it covers.
    pub fn source_maes(&self) -> Result<Vec<f64>> {
        self.predictions.iter().map(|row| mae(row, &self.actuals)).collect()
    }

    /// Synthetic dataset: a smooth seasonal temperature curve with integer
    /// noise as the actuals and one source per bias, each predicting
    /// `actual + bias`. Day labels count up from 2016-10-01.
    pub fn synthetic(days: usize, biases: &[i32], seed: u64) -> Self {
        let mut rng = SimRng::seed_from_u64(seed);
        let mut actuals = Vec::with_capacity(days);
        let mut level: i32 = 12;
        for _ in 0..days {
            level += rng.gen_range(-2..=2);
            level = level.clamp(-5, 25);
            actuals.push(level);
        }
        let labels = (0..days).map(day_label).collect();
        let sources = (0..biases.len()).map(|i| format!("src{}", i + 1)).collect();
        let predictions = biases.iter().map(|&b| actuals.iter().map(|&a| Some(a + b)).collect()).collect();
        ForecastDataset { days: labels, sources, predictions, actuals }
    }

    /// Copy with source `s` marked missing on the given days.
    pub fn with_dropout(mut self, s: usize, days: &[usize]) -> Result<Self> {
        for &d in days {
            self.predictions[s][d] = None;
        }
        ForecastDataset::new(self.days, self.sources, self.predictions, self.actuals)
    }
}

/// ISO date label for day offset `i` from 2016-10-01, with a simplified
/// calendar of the months October through September.
fn day_label(i: usize) -> String {
    const MONTHS: [(u32, u32, u32); 12] = [
        (2016, 10, 31),
        (2016, 11, 30),
        (2016, 12, 31),
        (2017, 1, 31),
        (2017, 2, 28),
        (2017, 3, 31),
        (2017, 4, 30),
        (2017, 5, 31),
        (2017, 6, 30),
        (2017, 7, 31),
        (2017, 8, 31),
        (2017, 9, 30),
    ];
    let mut rest = i as u32;
    let mut year_offset = 0;
    loop {
        for &(year, month, len) in &MONTHS {
            if rest < len {
                return format!("{:04}-{:02}-{:02}", year + year_offset, month, rest + 1);
            }
            rest -= len;
        }
        year_offset += 1;
    }
}

/// The six system variants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    /// Supervisor takes the mode of the raw predictions.
    BasicDominant,
    /// Supervisor takes the median of the raw predictions.
    CentralizedConsensus,
    /// Sources gossip with consensus integration, supervisor takes the median.
    DecentralizedConsensus,
    /// As above with preferred channels.
    DecentralizedConsensusFriends,
    /// Sources gossip with dominant-value voting, supervisor takes the mode.
    DominantDecentralized,
    /// Sources gossip with a dominant/consensus coin, supervisor takes the mode.
    DominantMixed,
}

impl Variant {
    /// Every variant in report order.
    pub const ALL: [Variant; 6] = [
        Variant::BasicDominant,
        Variant::CentralizedConsensus,
        Variant::DecentralizedConsensus,
        Variant::DecentralizedConsensusFriends,
        Variant::DominantDecentralized,
        Variant::DominantMixed,
    ];

    /// Command-line name.
    pub fn name(self) -> &'static str {
        match self {
            Variant::BasicDominant => "basic-dominant",
            Variant::CentralizedConsensus => "centralized-consensus",
            Variant::DecentralizedConsensus => "decentralized-consensus",
            Variant::DecentralizedConsensusFriends => "decentralized-consensus-friends",
            Variant::DominantDecentralized => "dominant-decentralized",
            Variant::DominantMixed => "dominant-mixed",
        }
    }

    /// Short row label used in reports.
    pub fn label(self) -> &'static str {
        match self {
            Variant::BasicDominant => "B. Dominant",
            Variant::CentralizedConsensus => "Cen. Cons.",
            Variant::DecentralizedConsensus => "Dec. Cons.",
            Variant::DecentralizedConsensusFriends => "D.-S. Cons.",
            Variant::DominantDecentralized => "Dom. Dec.",
            Variant::DominantMixed => "Dom. Mix.",
        }
    }

    /// Operator used by the supervisor.
    pub fn supervisor(self) -> Strategy {
        match self {
            Variant::BasicDominant | Variant::DominantDecentralized | Variant::DominantMixed => Strategy::Dominant,
            _ => Strategy::Consensus,
        }
    }

    /// Default gossip parameters, `None` for the centralized variants.
    pub fn default_gossip(self) -> Option<GossipParams> {
        let base = GossipParams::default();
        match self {
            Variant::BasicDominant | Variant::CentralizedConsensus => None,
            Variant::DecentralizedConsensus => {
                Some(GossipParams { f: 0, friend_prob: 0.0, strategy: Strategy::Consensus, ..base })
            }
            Variant::DecentralizedConsensusFriends => Some(GossipParams { strategy: Strategy::Consensus, ..base }),
            Variant::DominantDecentralized => Some(base),
            Variant::DominantMixed => {
                Some(GossipParams { strategy: Strategy::Mixed, mixed_consensus_prob: 0.5, ..base })
            }
        }
    }

    /// The centralized variant using the same supervisor operator.
    pub fn centralized_counterpart(self) -> Variant {
        match self.supervisor() {
            Strategy::Consensus => Variant::CentralizedConsensus,
            _ => Variant::BasicDominant,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidConfig { field: "variants", reason: format!("unknown variant `{s}`") })
    }
}

/// Source-layer gossip parameters.
///
/// Friend-group size is capped per day at the number of available sources
/// minus one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GossipParams {
    /// Votes gathered before integrating.
    pub v: usize,
    /// Friend-group size.
    pub f: usize,
    /// Probability of addressing a friend.
    pub friend_prob: f64,
    /// Per-tick send probability.
    pub activation_prob: f64,
    /// Ticks of gossip per day; zero disables gossip.
    pub gossip_ticks: usize,
    /// Source-layer integration.
    pub strategy: Strategy,
    /// Consensus probability for the mixed strategy.
    pub mixed_consensus_prob: f64,
    /// Whether sources vote for themselves.
    pub include_self: bool,
}

impl Default for GossipParams {
    fn default() -> Self {
        GossipParams {
            v: 3,
            f: 15,
            friend_prob: 0.4,
            activation_prob: 0.5,
            gossip_ticks: 50,
            strategy: Strategy::Dominant,
            mixed_consensus_prob: 0.5,
            include_self: true,
        }
    }
}

/// A variant together with its gossip parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VariantSpec {
    /// Which system.
    pub variant: Variant,
    /// Gossip parameters; `None` exactly for the centralized variants.
    pub gossip: Option<GossipParams>,
}

impl VariantSpec {
    /// Spec with the variant's default parameters.
    pub fn new(variant: Variant) -> Self {
        VariantSpec { variant, gossip: variant.default_gossip() }
    }

    /// Overrides the gossip duration (no effect on centralized variants).
    pub fn with_gossip_ticks(mut self, ticks: usize) -> Self {
        if let Some(g) = self.gossip.as_mut() {
            g.gossip_ticks = ticks;
        }
        self
    }

    /// Checks that centralized variants carry no gossip and gossip parameters
    /// are in range.
    pub fn validate(&self) -> Result<()> {
        match (self.variant.default_gossip(), self.gossip) {
            (None, Some(_)) => Err(Error::InvalidConfig {
                field: "gossip",
                reason: format!("{} takes no gossip parameters", self.variant),
            }),
            (Some(_), None) => Err(Error::InvalidConfig {
                field: "gossip",
                reason: format!("{} needs gossip parameters", self.variant),
            }),
            (_, Some(g)) => {
                let probe = SimConfig {
                    n: g.f + 1,
                    k: 1,
                    v: g.v,
                    f: g.f,
                    friend_prob: g.friend_prob,
                    activation_prob: g.activation_prob,
                    strategy: g.strategy,
                    mixed_consensus_prob: g.mixed_consensus_prob,
                    include_self: g.include_self,
                    max_ticks: g.gossip_ticks.max(1),
                    seed: 0,
                    symmetric_friends: false,
                };
                probe.validate()
            }
            (None, None) => Ok(()),
        }
    }
}

fn fuse(strategy: Strategy, values: &[KnowledgeValue], k: u32) -> Result<KnowledgeValue> {
    let votes = VoteSet::anonymous(values);
    match strategy {
        Strategy::Consensus => consensus_value(&votes, k),
        _ => dominant_value(&votes),
    }
}

fn day_seed(seed: u64, day: usize) -> u64 {
    seed ^ (day as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Source values after the day's gossip, rescaled to `0..=k` where `k` is
/// the span of the day's predictions.
fn gossip_day(raw: &[i32], gossip: Option<&GossipParams>, seed: u64) -> Result<(i32, u32, Vec<KnowledgeValue>)> {
    let min = *raw.iter().min().expect("non-empty day");
    let max = *raw.iter().max().expect("non-empty day");
    let k = (max - min) as u32;
    let values: Vec<KnowledgeValue> = raw.iter().map(|&p| KnowledgeValue((p - min) as u32)).collect();
    let Some(g) = gossip.filter(|g| g.gossip_ticks > 0 && raw.len() > 1) else {
        return Ok((min, k, values));
    };
    let n = raw.len();
    let f = g.f.min(n - 1);
    let config = SimConfig {
        n,
        k,
        v: g.v,
        f,
        friend_prob: if f == 0 { 0.0 } else { g.friend_prob },
        activation_prob: g.activation_prob,
        strategy: g.strategy,
        mixed_consensus_prob: g.mixed_consensus_prob,
        include_self: g.include_self,
        max_ticks: g.gossip_ticks,
        seed,
        symmetric_friends: false,
    };
    let traj = Simulation::with_values(config, values)?.run_to_end();
    Ok((min, k, traj.last().to_vec()))
}

/// Final per-day forecasts of one variant.
pub fn run_variant(data: &ForecastDataset, spec: &VariantSpec, seed: u64) -> Result<Vec<i32>> {
    spec.validate()?;
    (0..data.days.len())
        .map(|day| {
            let raw = data.day_predictions(day);
            if raw.is_empty() {
                return Err(Error::NoSources { day: data.days[day].clone() });
            }
            let (offset, k, values) = gossip_day(&raw, spec.gossip.as_ref(), day_seed(seed, day))?;
            let fused = fuse(spec.variant.supervisor(), &values, k)?;
            Ok(offset + fused.get() as i32)
        })
        .collect()
}

/// Mean absolute error over the days where a prediction exists.
pub fn mae(predictions: &[Option<i32>], actuals: &[i32]) -> Result<f64> {
    if predictions.len() != actuals.len() {
        return Err(Error::LengthMismatch { expected: actuals.len(), found: predictions.len() });
    }
    let (sum, count) = predictions
        .iter()
        .zip(actuals)
        .filter_map(|(p, &a)| p.map(|p| (i64::from(p) - i64::from(a)).unsigned_abs()))
        .fold((0u64, 0usize), |(s, c), e| (s + e, c + 1));
    if count == 0 {
        return Err(Error::EmptyOverlap);
    }
    Ok(sum as f64 / count as f64)
}

/// How the system compares with one reference source.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "snake_case"))]
pub enum Verdict {
    /// The system's MAE is larger than the reference's.
    Worse,
    /// Equal after rounding to whole percent.
    Equal,
    /// The system's MAE is smaller than the reference's.
    Better,
    /// The system made no error at all.
    SystemPerfect,
}

/// One comparison cell.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Comparison {
    /// Reference MAE.
    pub reference_mae: f64,
    /// `reference_mae / system_mae`; `None` when the system is perfect.
    pub ratio: Option<f64>,
    /// Outcome.
    pub verdict: Verdict,
    /// Table cell text.
    pub rendered: String,
}

fn round_half_up(x: f64) -> u64 {
    (x + 0.5) as u64
}

impl Comparison {
    /// Compares a reference MAE against the system's MAE.
    pub fn new(reference_mae: f64, system_mae: f64) -> Self {
        if system_mae == 0.0 {
            let (verdict, rendered) = if reference_mae == 0.0 {
                (Verdict::Equal, String::from("equal"))
            } else {
                (Verdict::SystemPerfect, String::from("system perfect"))
            };
            return Comparison { reference_mae, ratio: None, verdict, rendered };
        }
        let ratio = reference_mae / system_mae;
        let percent = round_half_up(100.0 * ratio);
        let (verdict, rendered) = if percent == 100 {
            (Verdict::Equal, String::from("equal"))
        } else if ratio < 1.0 {
            (Verdict::Worse, format!("{percent}%"))
        } else {
            (Verdict::Better, format!("{}% better", round_half_up(100.0 * (ratio - 1.0))))
        };
        Comparison { reference_mae, ratio: Some(ratio), verdict, rendered }
    }
}

/// Evaluation of one system run.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalReport {
    /// MAE of the system.
    pub system_mae: f64,
    /// MAE of each source.
    pub per_source_mae: Vec<f64>,
    /// Against the lowest source MAE.
    pub vs_best: Comparison,
    /// Against the highest source MAE.
    pub vs_worst: Comparison,
    /// Against the mean source MAE.
    pub vs_avg: Comparison,
}

/// Builds the report for a system MAE and the per-source MAEs.
pub fn compare_report(system_mae: f64, per_source_mae: &[f64]) -> Result<EvalReport> {
    if per_source_mae.is_empty() {
        return Err(Error::InvalidDataset(String::from("report needs at least one source")));
    }
    let best = per_source_mae.iter().copied().fold(f64::INFINITY, f64::min);
    let worst = per_source_mae.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let avg = per_source_mae.iter().sum::<f64>() / per_source_mae.len() as f64;
    Ok(EvalReport {
        system_mae,
        per_source_mae: per_source_mae.to_vec(),
        vs_best: Comparison::new(best, system_mae),
        vs_worst: Comparison::new(worst, system_mae),
        vs_avg: Comparison::new(avg, system_mae),
    })
}

/// Runs `spec` over `data` and evaluates the result.
pub fn evaluate(data: &ForecastDataset, spec: &VariantSpec, seed: u64) -> Result<EvalReport> {
    let forecasts: Vec<Option<i32>> = run_variant(data, spec, seed)?.into_iter().map(Some).collect();
    let system = mae(&forecasts, &data.actuals)?;
    compare_report(system, &data.source_maes()?)
}
