//! The centralized observer's view of a run.

use alloc::vec;
use alloc::vec::Vec;

use crate::engine::Trajectory;
use crate::model::{AgentId, FriendGraph, KnowledgeValue};
use crate::{Error, Result};

/// Observer output for one snapshot.
#[derive(Clone, Debug, PartialEq)]
pub struct TickMetrics {
    /// Agent count per value in `0..=k`.
    pub histogram: Vec<usize>,
    /// Multiplicity of the most common value.
    pub winning_count: usize,
    /// Fraction of agents whose value differs from the previous snapshot.
    pub change_rate: f64,
    /// Fraction of directed friend edges whose endpoints agree. Equals
    /// `random_agreement` when the graph has no edges.
    pub friend_agreement: f64,
    /// Agreement probability of two agents drawn uniformly with
    /// replacement: `sum_x (count_x / n)^2`.
    pub random_agreement: f64,
    /// Whether every agent holds the same value.
    pub unanimous: bool,
}

/// Histogram of `snapshot` over `0..=k`.
pub fn histogram(snapshot: &[KnowledgeValue], k: u32) -> Result<Vec<usize>> {
    let mut hist = vec![0usize; k as usize + 1];
    for v in snapshot {
        *hist.get_mut(v.index()).ok_or(Error::OutOfDomain { value: v.get(), k })? += 1;
    }
    Ok(hist)
}

/// Fraction of `edges` whose endpoints agree in `snapshot`, or `None` for no
/// edges. Each directed edge counts once.
pub fn edge_agreement<I>(snapshot: &[KnowledgeValue], edges: I) -> Option<f64>
where
    I: IntoIterator<Item = (AgentId, AgentId)>,
{
    let (mut total, mut agree) = (0usize, 0usize);
    for (a, b) in edges {
        total += 1;
        agree += usize::from(snapshot[a] == snapshot[b]);
    }
    (total > 0).then(|| agree as f64 / total as f64)
}

/// [`edge_agreement`] over the directed edges of `graph`.
pub fn friend_agreement(snapshot: &[KnowledgeValue], graph: &FriendGraph) -> Option<f64> {
    edge_agreement(snapshot, graph.edges())
}

/// Computes the observer metrics of `snapshot`, with `prev` as the preceding
/// snapshot (pass the snapshot itself for the initial state).
pub fn tick_metrics(
    prev: &[KnowledgeValue],
    snapshot: &[KnowledgeValue],
    graph: &FriendGraph,
    k: u32,
) -> Result<TickMetrics> {
    let n = snapshot.len();
    if prev.len() != n {
        return Err(Error::LengthMismatch { expected: n, found: prev.len() });
    }
    if graph.len() != n {
        return Err(Error::LengthMismatch { expected: n, found: graph.len() });
    }
    let histogram = histogram(snapshot, k)?;
    let winning_count = histogram.iter().copied().max().unwrap_or(0);
    let changed = prev.iter().zip(snapshot).filter(|(a, b)| a != b).count();
    let (change_rate, random_agreement) = if n == 0 {
        (0.0, 1.0)
    } else {
        let n = n as f64;
        let random = histogram.iter().map(|&c| (c as f64 / n) * (c as f64 / n)).sum();
        (changed as f64 / n, random)
    };
    let friend_agreement = friend_agreement(snapshot, graph).unwrap_or(random_agreement);
    Ok(TickMetrics {
        histogram,
        winning_count,
        change_rate,
        friend_agreement,
        random_agreement,
        unanimous: winning_count == n,
    })
}

/// Metrics for every snapshot of `traj`. Entry `t` describes tick `t`.
pub fn trajectory_metrics(traj: &Trajectory) -> Result<Vec<TickMetrics>> {
    let k = traj.config.k;
    (0..traj.snapshots.len())
        .map(|t| {
            let prev = &traj.snapshots[t.saturating_sub(1)];
            tick_metrics(prev, &traj.snapshots[t], &traj.graph, k)
        })
        .collect()
}

/// Fraction of agents changing value at every tick `1..=T`.
pub fn change_rates(traj: &Trajectory) -> Vec<f64> {
    traj.snapshots
        .windows(2)
        .map(|w| {
            let n = w[1].len().max(1) as f64;
            w[0].iter().zip(&w[1]).filter(|(a, b)| a != b).count() as f64 / n
        })
        .collect()
}

/// Mean per-tick change rate over `ticks`, where `ticks[i]` is the rate of
/// tick `i + 1`, restricted to ticks strictly after `burn_in`.
///
/// `absorbed` marks a run that stopped early in an absorbing state: the rate
/// is then zero when the burn-in outlasts the run.
pub fn mean_rate_after(rates: &[f64], burn_in: usize, absorbed: bool) -> Result<f64> {
    if burn_in >= rates.len() {
        return if absorbed { Ok(0.0) } else { Err(Error::BurnInTooLong { burn_in, ticks: rates.len() }) };
    }
    let tail = &rates[burn_in..];
    Ok(tail.iter().sum::<f64>() / tail.len() as f64)
}

/// Long-run chance of an agent changing its value: the mean change rate over
/// the recorded ticks after `burn_in`. Zero if the run absorbed before the
/// burn-in ended.
pub fn steady_change_rate(traj: &Trajectory, burn_in: usize) -> Result<f64> {
    mean_rate_after(&change_rates(traj), burn_in, traj.absorbed_at.is_some())
}

/// Friend-edge agreement minus random-pair agreement at `tick`. Positive
/// values mean friends agree more often than strangers.
pub fn clustering_gap(traj: &Trajectory, graph: &FriendGraph, tick: usize) -> Result<f64> {
    let snapshot = traj.snapshots.get(tick).ok_or(Error::TickOutOfRange { tick, ticks: traj.ticks() })?;
    let m = tick_metrics(snapshot, snapshot, graph, traj.config.k)?;
    Ok(m.friend_agreement - m.random_agreement)
}

/// Mean clustering gap over the recorded ticks in `from..=to`; zero when the
/// run ended before `from`.
pub fn mean_clustering_gap(traj: &Trajectory, graph: &FriendGraph, from: usize, to: usize) -> Result<f64> {
    let to = to.min(traj.ticks());
    if from > to {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for t in from..=to {
        sum += clustering_gap(traj, graph, t)?;
    }
    Ok(sum / (to - from + 1) as f64)
}

/// First tick at which the population is unanimous.
pub fn convergence_tick(traj: &Trajectory) -> Option<usize> {
    traj.snapshots.iter().position(|s| s.windows(2).all(|w| w[0] == w[1]))
}
