//! Discrete-time scheduler.
//!
//! Each tick runs three phases in a fixed order:
//!
//! 1. every agent, by ascending id, activates with `activation_prob` and, if
//!    active, addresses its *current* value to a target from
//!    [`select_target`];
//! 2. pending messages are appended to the target inboxes in sender order;
//! 3. every agent holding at least `v` messages, by ascending id, integrates
//!    the first `v` of them (plus its own value when `include_self`), adopts
//!    the result and clears its inbox.
//!
//! All randomness comes from one ChaCha8 generator seeded from the config and
//! consumed in that order, so a config fully determines its trajectory.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};

use crate::integrate::{integrate, VoteSet};
use crate::model::{
    make_friend_graph, make_symmetric_friend_graph, select_target, AgentState, FriendGraph, KnowledgeValue, SimConfig,
};
use crate::{coin, Error, Result, SimRng};

/// Counts for one tick.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TickEvents {
    /// Messages sent in phase 1.
    pub sent: usize,
    /// Messages appended to inboxes in phase 2.
    pub delivered: usize,
    /// Agents that integrated in phase 3.
    pub integrations: usize,
    /// Agents whose value changed in phase 3.
    pub changed: usize,
}

/// Observer record of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    /// Configuration that produced the run.
    pub config: SimConfig,
    /// Friend graph of the run.
    pub graph: FriendGraph,
    /// `snapshots[t]` holds every agent's value after tick `t`; index 0 is the
    /// initial state.
    pub snapshots: Vec<Vec<KnowledgeValue>>,
    /// `events[t - 1]` holds the counts of tick `t`.
    pub events: Vec<TickEvents>,
    /// Tick at which the run reached an absorbing state and stopped early.
    pub absorbed_at: Option<usize>,
}

impl Trajectory {
    /// Number of ticks executed.
    pub fn ticks(&self) -> usize {
        self.snapshots.len() - 1
    }

    /// Final population state.
    pub fn last(&self) -> &[KnowledgeValue] {
        self.snapshots.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Mutable state of one run.
#[derive(Clone, Debug)]
pub struct Simulation {
    config: SimConfig,
    graph: FriendGraph,
    agents: Vec<AgentState>,
    rng: SimRng,
    tick: usize,
    pending: Vec<(usize, KnowledgeValue)>,
    votes: Vec<KnowledgeValue>,
}

fn build_graph(config: &SimConfig, rng: &mut SimRng) -> Result<FriendGraph> {
    if config.symmetric_friends {
        make_symmetric_friend_graph(config.n, config.f, rng)
    } else {
        make_friend_graph(config.n, config.f, rng)
    }
}

impl Simulation {
    /// Validates `config`, builds the friend graph and draws independent
    /// uniform initial values in `0..=k`.
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = SimRng::seed_from_u64(config.seed);
        let graph = build_graph(&config, &mut rng)?;
        let values: Vec<KnowledgeValue> = (0..config.n).map(|_| KnowledgeValue(rng.gen_range(0..=config.k))).collect();
        Ok(Self::assemble(config, graph, values, rng))
    }

    /// Like [`Simulation::new`] but starts from the given values instead of
    /// random ones. The friend graph is the same one `new` would build.
    pub fn with_values(config: SimConfig, values: Vec<KnowledgeValue>) -> Result<Self> {
        config.validate()?;
        check_values(&values, config.n, config.k)?;
        let mut rng = SimRng::seed_from_u64(config.seed);
        let graph = build_graph(&config, &mut rng)?;
        Ok(Self::assemble(config, graph, values, rng))
    }

    /// Starts from an explicit graph and explicit values.
    pub fn from_parts(config: SimConfig, graph: FriendGraph, values: Vec<KnowledgeValue>) -> Result<Self> {
        config.validate()?;
        check_values(&values, config.n, config.k)?;
        if graph.len() != config.n {
            return Err(Error::LengthMismatch { expected: config.n, found: graph.len() });
        }
        if graph.degree() != config.f {
            return Err(Error::InvalidConfig { field: "f", reason: "graph degree differs from f".into() });
        }
        let rng = SimRng::seed_from_u64(config.seed);
        Ok(Self::assemble(config, graph, values, rng))
    }

    fn assemble(config: SimConfig, graph: FriendGraph, values: Vec<KnowledgeValue>, rng: SimRng) -> Self {
        let agents = values.into_iter().enumerate().map(|(id, v)| AgentState::new(id, v)).collect();
        Simulation { votes: Vec::with_capacity(config.v + 1), config, graph, agents, rng, tick: 0, pending: Vec::new() }
    }

    /// Configuration of the run.
    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    /// Friend graph of the run.
    pub fn graph(&self) -> &FriendGraph {
        &self.graph
    }

    /// Agent states, indexed by id.
    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    /// Ticks executed so far.
    pub fn tick(&self) -> usize {
        self.tick
    }

    /// Current value of every agent.
    pub fn values(&self) -> Vec<KnowledgeValue> {
        self.agents.iter().map(|a| a.current).collect()
    }

    /// True once no future tick can change any value: the population is
    /// unanimous and every inbox holds only the unanimous value (in
    /// particular, every inbox is empty).
    pub fn is_absorbing(&self) -> bool {
        let Some(first) = self.agents.first().map(|a| a.current) else {
            return true;
        };
        self.agents.iter().all(|a| a.current == first && a.inbox.iter().all(|&m| m == first))
    }

    /// Executes one tick.
    pub fn step(&mut self) -> TickEvents {
        let n = self.config.n;
        let mut events = TickEvents::default();

        self.pending.clear();
        for id in 0..n {
            if coin(&mut self.rng, self.config.activation_prob) && n > 1 {
                let target = select_target(id, &self.graph, self.config.friend_prob, &mut self.rng)
                    .expect("validated config always admits a target");
                self.pending.push((target, self.agents[id].current));
            }
        }
        events.sent = self.pending.len();

        for &(target, value) in &self.pending {
            self.agents[target].inbox.push(value);
        }
        events.delivered = self.pending.len();

        let v = self.config.v;
        for agent in &mut self.agents {
            debug_assert!(agent.inbox.len() < v + n, "inbox overflow at agent {}", agent.id);
            if agent.inbox.len() < v {
                continue;
            }
            self.votes.clear();
            self.votes.extend_from_slice(&agent.inbox[..v]);
            if self.config.include_self {
                self.votes.push(agent.current);
            }
            let votes = VoteSet::new(&self.votes, agent.current);
            let next =
                integrate(self.config.strategy, &votes, self.config.k, self.config.mixed_consensus_prob, &mut self.rng)
                    .expect("vote set is non-empty and within the domain");
            events.integrations += 1;
            if next != agent.current {
                events.changed += 1;
                agent.current = next;
            }
            agent.inbox.clear();
        }

        self.tick += 1;
        events
    }

    /// Steps until `max_ticks` or until the state is absorbing, recording a
    /// snapshot after every tick.
    pub fn run_to_end(mut self) -> Trajectory {
        let mut snapshots = Vec::with_capacity(self.config.max_ticks + 1);
        let mut events = Vec::with_capacity(self.config.max_ticks);
        snapshots.push(self.values());
        let mut absorbed_at = None;
        while self.tick < self.config.max_ticks {
            events.push(self.step());
            snapshots.push(self.values());
            if self.is_absorbing() {
                absorbed_at = Some(self.tick);
                break;
            }
        }
        Trajectory { config: self.config, graph: self.graph, snapshots, events, absorbed_at }
    }
}

fn check_values(values: &[KnowledgeValue], n: usize, k: u32) -> Result<()> {
    if values.len() != n {
        return Err(Error::LengthMismatch { expected: n, found: values.len() });
    }
    match values.iter().find(|v| v.get() > k) {
        Some(v) => Err(Error::OutOfDomain { value: v.get(), k }),
        None => Ok(()),
    }
}

/// Runs `config` from a random initial state.
pub fn run(config: SimConfig) -> Result<Trajectory> {
    Ok(Simulation::new(config)?.run_to_end())
}
