//! Static structure of the collective: knowledge values, agents, the run
//! configuration, the preferential-channel graph and target selection.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::index;
use rand::Rng;

use crate::{coin, Error, Result};

/// Index of an agent in `0..n`.
pub type AgentId = usize;

/// Largest accepted domain bound. Histograms are dense over `0..=k`.
pub const MAX_DOMAIN: u32 = 1 << 20;

/// A single integer knowledge state in `0..=k`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(transparent))]
pub struct KnowledgeValue(pub u32);

impl KnowledgeValue {
    /// Raw integer value.
    #[inline]
    pub fn get(self) -> u32 {
        self.0
    }

    /// Index into a dense histogram.
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<u32> for KnowledgeValue {
    fn from(v: u32) -> Self {
        KnowledgeValue(v)
    }
}

impl fmt::Display for KnowledgeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Mutable per-agent state owned by the scheduler. Friend lists live in the
/// run's [`FriendGraph`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AgentState {
    /// Agent index.
    pub id: AgentId,
    /// Current knowledge state.
    pub current: KnowledgeValue,
    /// Received values in arrival order.
    pub inbox: Vec<KnowledgeValue>,
}

impl AgentState {
    /// Agent with an empty inbox.
    pub fn new(id: AgentId, current: KnowledgeValue) -> Self {
        AgentState { id, current, inbox: Vec::new() }
    }
}

/// How an agent turns its gathered votes into a new state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "lowercase"))]
pub enum Strategy {
    /// Most frequent value.
    #[default]
    Dominant,
    /// Lower median.
    Consensus,
    /// Consensus with probability `mixed_consensus_prob`, dominant otherwise.
    Mixed,
}

impl Strategy {
    /// Lowercase name as used in scenario files.
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Dominant => "dominant",
            Strategy::Consensus => "consensus",
            Strategy::Mixed => "mixed",
        }
    }
}

/// Every protocol parameter of one run.
///
/// `friend_prob` is the probability of addressing a friend, i.e. the
/// complement of the probability of addressing the whole population.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(deny_unknown_fields))]
pub struct SimConfig {
    /// Number of agents.
    pub n: usize,
    /// Domain bound: values live in `0..=k`.
    pub k: u32,
    /// Values gathered from others before integrating.
    pub v: usize,
    /// Friend-group size.
    #[cfg_attr(feature = "serde", serde(default))]
    pub f: usize,
    /// Probability of addressing a friend instead of a uniform other agent.
    #[cfg_attr(feature = "serde", serde(default))]
    pub friend_prob: f64,
    /// Per-tick, per-agent probability of sending.
    #[cfg_attr(feature = "serde", serde(default = "defaults::activation_prob"))]
    pub activation_prob: f64,
    /// Integration operator.
    #[cfg_attr(feature = "serde", serde(default))]
    pub strategy: Strategy,
    /// Consensus probability for [`Strategy::Mixed`]; ignored otherwise.
    #[cfg_attr(feature = "serde", serde(default = "defaults::mixed_consensus_prob"))]
    pub mixed_consensus_prob: f64,
    /// Whether the integrating agent's own value joins its vote set.
    #[cfg_attr(feature = "serde", serde(default = "defaults::include_self"))]
    pub include_self: bool,
    /// Tick horizon.
    #[cfg_attr(feature = "serde", serde(default = "defaults::max_ticks"))]
    pub max_ticks: usize,
    /// Seed of the run generator.
    #[cfg_attr(feature = "serde", serde(default))]
    pub seed: u64,
    /// Build an undirected `f`-regular friend graph instead of independent
    /// directed friend lists.
    #[cfg_attr(feature = "serde", serde(default))]
    pub symmetric_friends: bool,
}

#[cfg(feature = "serde")]
mod defaults {
    pub fn activation_prob() -> f64 {
        0.5
    }
    pub fn mixed_consensus_prob() -> f64 {
        0.5
    }
    pub fn include_self() -> bool {
        true
    }
    pub fn max_ticks() -> usize {
        500
    }
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n: 500,
            k: 1,
            v: 3,
            f: 0,
            friend_prob: 0.0,
            activation_prob: 0.5,
            strategy: Strategy::Dominant,
            mixed_consensus_prob: 0.5,
            include_self: true,
            max_ticks: 500,
            seed: 0,
            symmetric_friends: false,
        }
    }
}

fn invalid(field: &'static str, reason: impl Into<alloc::string::String>) -> Error {
    Error::InvalidConfig { field, reason: reason.into() }
}

fn is_probability(p: f64) -> bool {
    (0.0..=1.0).contains(&p)
}

impl SimConfig {
    /// Binary-domain configuration with `n` agents gathering `v` votes and no
    /// friends; everything else at its default.
    pub fn new(n: usize, k: u32, v: usize) -> Self {
        SimConfig { n, k, v, ..SimConfig::default() }
    }

    /// Sets the friend-group size and friend probability.
    pub fn with_friends(mut self, f: usize, friend_prob: f64) -> Self {
        self.f = f;
        self.friend_prob = friend_prob;
        self
    }

    /// Sets the seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Checks every field constraint. The first violation is reported with
    /// the field's name.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("n", "must be at least 1"));
        }
        if self.k > MAX_DOMAIN {
            return Err(invalid("k", format!("must be at most {MAX_DOMAIN}")));
        }
        if self.v == 0 {
            return Err(invalid("v", "must be at least 1"));
        }
        if self.f > self.n - 1 {
            return Err(invalid("f", format!("must be at most n - 1 = {}", self.n - 1)));
        }
        if !is_probability(self.friend_prob) {
            return Err(invalid("friend_prob", "must lie in [0, 1]"));
        }
        if self.f == 0 && self.friend_prob != 0.0 {
            return Err(invalid("friend_prob", "must be 0 when f is 0"));
        }
        if !(self.activation_prob > 0.0 && self.activation_prob <= 1.0) {
            return Err(invalid("activation_prob", "must lie in (0, 1]"));
        }
        if !is_probability(self.mixed_consensus_prob) {
            return Err(invalid("mixed_consensus_prob", "must lie in [0, 1]"));
        }
        if self.max_ticks == 0 {
            return Err(invalid("max_ticks", "must be at least 1"));
        }
        if self.symmetric_friends && (self.n * self.f) % 2 == 1 {
            return Err(invalid("f", "n * f must be even for a symmetric friend graph"));
        }
        Ok(())
    }
}

/// Directed preferential-channel adjacency, fixed for a run. Every agent has
/// exactly `f` distinct friends, none of them itself.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FriendGraph {
    adjacency: Vec<Vec<AgentId>>,
}

impl FriendGraph {
    /// Graph without any friendships.
    pub fn empty(n: usize) -> Self {
        FriendGraph { adjacency: alloc::vec![Vec::new(); n] }
    }

    /// Builds a graph from explicit friend lists, checking the structural
    /// invariants (uniform out-degree, no self-loops, no duplicates, ids in
    /// range).
    pub fn from_adjacency(adjacency: Vec<Vec<AgentId>>) -> Result<Self> {
        let n = adjacency.len();
        let degree = adjacency.first().map_or(0, Vec::len);
        for (id, friends) in adjacency.iter().enumerate() {
            if friends.len() != degree {
                return Err(invalid("f", format!("agent {id} has {} friends, expected {degree}", friends.len())));
            }
            let mut seen = BTreeSet::new();
            for &friend in friends {
                if friend >= n || friend == id || !seen.insert(friend) {
                    return Err(invalid("f", format!("agent {id} has an invalid friend entry {friend}")));
                }
            }
        }
        Ok(FriendGraph { adjacency })
    }

    /// Number of agents.
    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    /// True for a graph over zero agents.
    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    /// Out-degree shared by every agent.
    pub fn degree(&self) -> usize {
        self.adjacency.first().map_or(0, Vec::len)
    }

    /// Friends of `id`, ascending.
    pub fn friends(&self, id: AgentId) -> &[AgentId] {
        &self.adjacency[id]
    }

    /// All directed edges `(agent, friend)`.
    pub fn edges(&self) -> impl Iterator<Item = (AgentId, AgentId)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(a, friends)| friends.iter().map(move |&b| (a, b)))
    }

    /// Total number of directed edges.
    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum()
    }
}

fn check_degree(n: usize, f: usize) -> Result<()> {
    if n == 0 && f > 0 || n > 0 && f > n - 1 {
        return Err(invalid("f", format!("cannot pick {f} friends among {} other agents", n.saturating_sub(1))));
    }
    Ok(())
}

/// Gives every agent a uniformly random `f`-subset of the other `n - 1`
/// agents. Friendship is directed.
pub fn make_friend_graph<R: Rng + ?Sized>(n: usize, f: usize, rng: &mut R) -> Result<FriendGraph> {
    check_degree(n, f)?;
    let adjacency = (0..n)
        .map(|id| {
            let mut friends: Vec<AgentId> =
                index::sample(rng, n - 1, f).into_iter().map(|i| if i >= id { i + 1 } else { i }).collect();
            friends.sort_unstable();
            friends
        })
        .collect();
    Ok(FriendGraph { adjacency })
}

/// Random undirected `f`-regular graph, stored with both directions of every
/// edge. Starts from a circulant graph and randomizes it with degree-preserving
/// double-edge swaps. Requires `n * f` even.
pub fn make_symmetric_friend_graph<R: Rng + ?Sized>(n: usize, f: usize, rng: &mut R) -> Result<FriendGraph> {
    check_degree(n, f)?;
    if (n * f) % 2 == 1 {
        return Err(invalid("f", "n * f must be even for a symmetric friend graph"));
    }
    let key = |a: AgentId, b: AgentId| if a < b { (a, b) } else { (b, a) };
    let mut edges: Vec<(AgentId, AgentId)> = Vec::with_capacity(n * f / 2);
    for i in 0..n {
        for d in 1..=f / 2 {
            edges.push(key(i, (i + d) % n));
        }
        if f % 2 == 1 && i < n / 2 {
            edges.push(key(i, i + n / 2));
        }
    }
    let mut present: BTreeSet<(AgentId, AgentId)> = edges.iter().copied().collect();
    debug_assert_eq!(present.len(), edges.len());

    if edges.len() >= 2 {
        for _ in 0..10 * edges.len() {
            let i = rng.gen_range(0..edges.len());
            let j = rng.gen_range(0..edges.len());
            let (a, b) = edges[i];
            let (c, d) = if rng.gen::<bool>() { edges[j] } else { (edges[j].1, edges[j].0) };
            // (a,b),(c,d) -> (a,d),(c,b)
            if a == d || c == b || a == c || b == d {
                continue;
            }
            let (e1, e2) = (key(a, d), key(c, b));
            if present.contains(&e1) || present.contains(&e2) {
                continue;
            }
            present.remove(&edges[i]);
            present.remove(&key(c, d));
            present.insert(e1);
            present.insert(e2);
            edges[i] = e1;
            edges[j] = e2;
        }
    }

    let mut adjacency = alloc::vec![Vec::with_capacity(f); n];
    for &(a, b) in &present {
        adjacency[a].push(b);
        adjacency[b].push(a);
    }
    for friends in &mut adjacency {
        friends.sort_unstable();
    }
    Ok(FriendGraph { adjacency })
}

/// Picks the recipient of `sender`'s next message: a uniform friend with
/// probability `friend_prob`, otherwise a uniform agent other than `sender`.
///
/// Always consumes the friend coin, then one index draw.
pub fn select_target<R: Rng + ?Sized>(
    sender: AgentId,
    graph: &FriendGraph,
    friend_prob: f64,
    rng: &mut R,
) -> Result<AgentId> {
    let n = graph.len();
    if n < 2 {
        return Err(Error::NoTarget { agent: sender, n });
    }
    let friends = graph.friends(sender);
    if friend_prob > 0.0 && friends.is_empty() {
        return Err(Error::NoFriends { agent: sender, friend_prob });
    }
    if coin(rng, friend_prob) {
        Ok(friends[rng.gen_range(0..friends.len())])
    } else {
        let pick = rng.gen_range(0..n - 1);
        Ok(if pick >= sender { pick + 1 } else { pick })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::SimRng;
    use rand::SeedableRng;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn rng(seed: u64) -> SimRng {
        SimRng::seed_from_u64(seed)
    }

    #[test]
    fn zero_friends_gives_empty_lists() {
        let g = make_friend_graph(5, 0, &mut rng(1)).unwrap();
        assert_eq!(g.len(), 5);
        assert!((0..5).all(|i| g.friends(i).is_empty()));
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn pair_with_one_friend_each() {
        let g = make_friend_graph(2, 1, &mut rng(7)).unwrap();
        assert_eq!(g.friends(0), &[1]);
        assert_eq!(g.friends(1), &[0]);
    }

    #[test]
    fn twenty_friend_graph_has_twenty_distinct_non_self_friends() {
        for seed in 0..5 {
            let g = make_friend_graph(500, 20, &mut rng(seed)).unwrap();
            for id in 0..500 {
                let friends = g.friends(id);
                assert_eq!(friends.len(), 20);
                assert!(!friends.contains(&id));
                let unique: BTreeSet<_> = friends.iter().collect();
                assert_eq!(unique.len(), 20);
            }
            assert!(FriendGraph::from_adjacency(g.adjacency.clone()).is_ok());
        }
    }

    #[test]
    fn infeasible_friend_count_is_rejected() {
        assert!(matches!(make_friend_graph(5, 5, &mut rng(0)), Err(Error::InvalidConfig { field: "f", .. })));
        assert!(make_friend_graph(5, 4, &mut rng(0)).is_ok());
    }

    #[test]
    fn friend_graph_is_deterministic() {
        let a = make_friend_graph(100, 7, &mut rng(42)).unwrap();
        let b = make_friend_graph(100, 7, &mut rng(42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn symmetric_graph_is_regular_and_undirected() {
        for &(n, f) in &[(500, 20), (10, 3), (6, 5), (7, 6), (2, 1)] {
            let g = make_symmetric_friend_graph(n, f, &mut rng(3)).unwrap();
            let g = FriendGraph::from_adjacency(g.adjacency).unwrap();
            assert_eq!(g.degree(), f);
            for (a, b) in g.edges() {
                assert!(g.friends(b).contains(&a), "edge {a}->{b} lacks its reverse");
            }
        }
        assert!(make_symmetric_friend_graph(5, 3, &mut rng(0)).is_err());
    }

    #[test]
    fn from_adjacency_rejects_broken_graphs() {
        assert!(FriendGraph::from_adjacency(vec![vec![0], vec![0]]).is_err());
        assert!(FriendGraph::from_adjacency(vec![vec![1, 1], vec![0, 2], vec![0, 1]]).is_err());
        assert!(FriendGraph::from_adjacency(vec![vec![1], vec![]]).is_err());
        assert!(FriendGraph::from_adjacency(vec![vec![3], vec![0]]).is_err());
    }

    #[test]
    fn forced_friend_choice() {
        let g = FriendGraph::from_adjacency(vec![vec![2], vec![0], vec![1]]).unwrap();
        let mut r = rng(5);
        for _ in 0..1000 {
            assert_eq!(select_target(0, &g, 1.0, &mut r).unwrap(), 2);
        }
    }

    #[test]
    fn select_target_errors() {
        let g = FriendGraph::empty(4);
        assert!(matches!(select_target(1, &g, 0.3, &mut rng(0)), Err(Error::NoFriends { agent: 1, .. })));
        let single = FriendGraph::empty(1);
        assert!(matches!(select_target(0, &single, 0.0, &mut rng(0)), Err(Error::NoTarget { .. })));
    }

    #[test]
    fn never_targets_self() {
        let g = make_friend_graph(20, 3, &mut rng(11)).unwrap();
        let mut r = rng(12);
        for draw in 0..20_000 {
            let sender = draw % 20;
            assert_ne!(select_target(sender, &g, 0.5, &mut r).unwrap(), sender);
        }
    }

    #[test]
    fn uniform_targets_pass_chi_square() {
        let n = 500;
        let g = FriendGraph::empty(n);
        let mut r = rng(2024);
        let mut counts = vec![0u64; n];
        let draws = 100_000;
        for _ in 0..draws {
            counts[select_target(17, &g, 0.0, &mut r).unwrap()] += 1;
        }
        assert_eq!(counts[17], 0);
        let expected = draws as f64 / (n - 1) as f64;
        let stat: f64 = counts
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != 17)
            .map(|(_, &c)| (c as f64 - expected).powi(2) / expected)
            .sum();
        let critical = ChiSquared::new((n - 2) as f64).unwrap().inverse_cdf(0.99);
        assert!(stat < critical, "chi-square {stat} exceeds critical {critical}");
    }

    #[test]
    fn friend_hit_frequency_matches_mixture() {
        let (n, f, p) = (500, 20, 0.4);
        let g = make_friend_graph(n, f, &mut rng(8)).unwrap();
        let sender = 123;
        let friends: BTreeSet<_> = g.friends(sender).iter().copied().collect();
        let mut r = rng(9);
        let draws = 100_000;
        let hits = (0..draws).filter(|_| friends.contains(&select_target(sender, &g, p, &mut r).unwrap())).count();
        let expected = p + (1.0 - p) * f as f64 / (n - 1) as f64;
        let se = (expected * (1.0 - expected) / draws as f64).sqrt();
        let observed = hits as f64 / draws as f64;
        assert!((observed - expected).abs() < 3.0 * se, "observed {observed}, expected {expected} ± {}", 3.0 * se);
    }

    #[test]
    fn config_validation_names_fields() {
        let field = |c: SimConfig| match c.validate() {
            Err(Error::InvalidConfig { field, .. }) => field,
            other => panic!("expected a config error, got {other:?}"),
        };
        assert_eq!(field(SimConfig { v: 0, ..SimConfig::default() }), "v");
        assert_eq!(field(SimConfig { n: 0, ..SimConfig::default() }), "n");
        assert_eq!(field(SimConfig::new(10, 1, 3).with_friends(10, 0.5)), "f");
        assert_eq!(field(SimConfig::new(10, 1, 3).with_friends(0, 0.5)), "friend_prob");
        assert_eq!(field(SimConfig::new(10, 1, 3).with_friends(2, 1.5)), "friend_prob");
        assert_eq!(field(SimConfig { activation_prob: 0.0, ..SimConfig::default() }), "activation_prob");
        assert_eq!(field(SimConfig { mixed_consensus_prob: -0.1, ..SimConfig::default() }), "mixed_consensus_prob");
        assert_eq!(field(SimConfig { max_ticks: 0, ..SimConfig::default() }), "max_ticks");
        assert!(SimConfig::default().validate().is_ok());
        assert!(SimConfig::new(500, 1, 3).with_friends(20, 0.4).validate().is_ok());
    }
}
