//! Discrete-tick simulation loop.
//!
//! Each tick runs in a fixed phase order:
//!
//! 1. matured investment deliveries are evaluated and committed;
//! 2. every agent and the system are classified on one snapshot;
//! 3. agents with a profile select a strategy cell and enact it;
//! 4. hoarding takes effect, then proposals are resolved in agent order
//!    (standing rules first, by rule id, then strategy proposals);
//! 5. requirement adjustments and destruction are applied;
//! 6. the conservation audit compares totals before and after.
//!
//! All decisions in a tick see the snapshot from phase 2.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{CountMode, SasState, SufficiencyBand};
use crate::entitlement::{self, ExchangeContext, ExchangeOutcome};
use crate::multiset::Multiset;
use crate::population::{snapshot_states, AgentId, Population, Snapshot};
use crate::report::{self, SimReport};
use crate::resource::{Kind, ResourceClass, ResourceItem};
use crate::strategy::{self, Attempt, Mutation, Proposal, Stance};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "when", rename_all = "snake_case")]
pub enum StopCondition {
    /// Every agent is in `state` for `class`.
    AllAgents {
        class: ResourceClass,
        state: SasState,
    },
    /// The system is in `state` for `class`.
    System {
        class: ResourceClass,
        state: SasState,
    },
}

impl StopCondition {
    pub fn holds(&self, snapshot: &Snapshot) -> bool {
        match self {
            StopCondition::AllAgents { class, state } => snapshot
                .agents
                .iter()
                .all(|a| a.classes.get(class).is_some_and(|r| r.state == *state)),
            StopCondition::System { class, state } => snapshot.system.get(class) == Some(state),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    #[serde(default = "one_tick")]
    pub ticks: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mode: CountMode,
    #[serde(default)]
    pub partial_commit: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stop_conditions: Vec<StopCondition>,
}

fn one_tick() -> u32 {
    1
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            ticks: 1,
            seed: 0,
            mode: CountMode::Raw,
            partial_commit: false,
            stop_conditions: Vec::new(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.ticks == 0 {
            return Err(EngineError::InvalidConfig(
                "ticks must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Where an exchange came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Source {
    Delivery { committed_tick: u32 },
    Standing,
    Strategy { cell: u8 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    TickStart {
        tick: u32,
    },
    StateSnapshot {
        tick: u32,
        system: BTreeMap<ResourceClass, SasState>,
    },
    StrategySelected {
        tick: u32,
        agent: AgentId,
        class: ResourceClass,
        stance: Stance,
        cell: u8,
        label: String,
    },
    Annotation {
        tick: u32,
        agent: AgentId,
        cell: u8,
        note: String,
    },
    OutcomeCommitted {
        tick: u32,
        source: Source,
        outcome: ExchangeOutcome,
    },
    OutcomeFailed {
        tick: u32,
        source: Source,
        outcome: ExchangeOutcome,
    },
    EvaluationError {
        tick: u32,
        source: Source,
        rule_id: String,
        holder: AgentId,
        counterparty: AgentId,
        message: String,
    },
    PromiseScheduled {
        tick: u32,
        investor: AgentId,
        counterparty: AgentId,
        rule_id: String,
        due_tick: u32,
    },
    RequirementAdjusted {
        tick: u32,
        agent: AgentId,
        class: ResourceClass,
        band: SufficiencyBand,
    },
    /// A change to system totals outside of exchange (destruction).
    NonConservingEvent {
        tick: u32,
        agent: AgentId,
        cell: u8,
        item: ResourceItem,
        delta: i64,
    },
    TickEnd {
        tick: u32,
    },
}

impl Event {
    pub fn tick(&self) -> u32 {
        match self {
            Event::TickStart { tick }
            | Event::StateSnapshot { tick, .. }
            | Event::StrategySelected { tick, .. }
            | Event::Annotation { tick, .. }
            | Event::OutcomeCommitted { tick, .. }
            | Event::OutcomeFailed { tick, .. }
            | Event::EvaluationError { tick, .. }
            | Event::PromiseScheduled { tick, .. }
            | Event::RequirementAdjusted { tick, .. }
            | Event::NonConservingEvent { tick, .. }
            | Event::TickEnd { tick } => *tick,
        }
    }

    pub fn outcome(&self) -> Option<&ExchangeOutcome> {
        match self {
            Event::OutcomeCommitted { outcome, .. } | Event::OutcomeFailed { outcome, .. } => {
                Some(outcome)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingDelivery {
    pub due_tick: u32,
    pub committed_tick: u32,
    pub investor: AgentId,
    pub counterparty: AgentId,
    pub rule_id: String,
}

/// Per (class, kind) change in system totals over one tick.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub tick: u32,
    pub ok: bool,
    /// Signed sum of flagged non-conserving events.
    pub flagged: BTreeMap<String, i64>,
    /// Observed change, keyed `class:kind`.
    pub observed: BTreeMap<String, i64>,
}

/// Everything besides the population that carries over between ticks.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineState {
    pub tick: u32,
    pub rng: ChaCha8Rng,
    pub pending: Vec<PendingDelivery>,
}

impl EngineState {
    pub fn new(seed: u64) -> Self {
        Self {
            tick: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            pending: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickResult {
    pub snapshot: Snapshot,
    pub states: Vec<report::StateRow>,
    pub system: Vec<report::SystemRow>,
    pub events: Vec<Event>,
    pub audit: AuditEntry,
}

fn class_kind_totals(items: &Multiset<ResourceItem>) -> BTreeMap<String, i64> {
    let mut out = BTreeMap::new();
    for (item, n) in items {
        *out.entry(format!("{}:{}", item.class, item.kind))
            .or_insert(0) += *n as i64;
    }
    out
}

/// A running simulation over an owned population.
#[derive(Debug, Clone)]
pub struct Simulation {
    pop: Population,
    config: SimConfig,
    state: EngineState,
}

impl Simulation {
    pub fn new(pop: Population, config: SimConfig) -> Result<Self, EngineError> {
        config.validate()?;
        let state = EngineState::new(config.seed);
        Ok(Self { pop, config, state })
    }

    pub fn population(&self) -> &Population {
        &self.pop
    }

    pub fn state(&self) -> &EngineState {
        &self.state
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn snapshot(&self) -> Snapshot {
        snapshot_states(&self.pop, self.config.mode)
    }

    pub fn into_population(self) -> Population {
        self.pop
    }

    /// Runs one tick.
    pub fn step(&mut self) -> TickResult {
        let tick = self.state.tick;
        let mode = self.config.mode;
        let mut events = vec![Event::TickStart { tick }];
        let before = class_kind_totals(&self.pop.total_holdings());
        let mut ctx = ExchangeContext::new(self.config.partial_commit);

        self.deliver_matured(tick, &mut ctx, &mut events);

        let snapshot = snapshot_states(&self.pop, mode);
        events.push(Event::StateSnapshot {
            tick,
            system: snapshot.system.clone(),
        });
        let (states, system) = report::readings(tick, &self.pop, &snapshot, mode);

        // Selection and enactment, all against the same snapshot.
        let mut proposals: BTreeMap<usize, Vec<(Source, Proposal)>> = BTreeMap::new();
        let mut mutations: Vec<(u8, Mutation)> = Vec::new();
        for (idx, agent) in self.pop.agents().iter().enumerate() {
            let Some(profile) = &agent.profile else {
                continue;
            };
            let states = snapshot.class_states(&agent.id);
            let Some(sel) = strategy::select(&states, profile, &mut self.state.rng) else {
                continue;
            };
            events.push(Event::StrategySelected {
                tick,
                agent: agent.id.clone(),
                class: sel.class,
                stance: sel.cell.stance,
                cell: sel.cell.number,
                label: sel.cell.label.clone(),
            });
            let en = strategy::enact(&sel, agent, &self.pop, &snapshot);
            for note in en.annotations {
                events.push(Event::Annotation {
                    tick,
                    agent: agent.id.clone(),
                    cell: sel.cell.number,
                    note,
                });
            }
            let source = Source::Strategy {
                cell: sel.cell.number,
            };
            proposals
                .entry(idx)
                .or_default()
                .extend(en.proposals.into_iter().map(|p| (source.clone(), p)));
            mutations.extend(en.mutations.into_iter().map(|m| (sel.cell.number, m)));
        }

        for (_, m) in &mutations {
            if let Mutation::Hoard { agent, class } = m {
                ctx.hoarded.insert((agent.clone(), *class));
            }
        }

        self.resolve(tick, &snapshot, proposals, &mut ctx, &mut events);
        let flagged = self.apply_mutations(tick, &mutations, &mut events);

        let after = class_kind_totals(&self.pop.total_holdings());
        let mut observed = BTreeMap::new();
        for key in before.keys().chain(after.keys()) {
            let d = after.get(key).copied().unwrap_or(0) - before.get(key).copied().unwrap_or(0);
            if d != 0 {
                observed.insert(key.clone(), d);
            }
        }
        let audit = AuditEntry {
            tick,
            ok: observed == flagged,
            flagged,
            observed,
        };

        events.push(Event::TickEnd { tick });
        self.state.tick += 1;
        TickResult {
            snapshot,
            states,
            system,
            events,
            audit,
        }
    }

    fn deliver_matured(&mut self, tick: u32, ctx: &mut ExchangeContext, events: &mut Vec<Event>) {
        let (due, later): (Vec<_>, Vec<_>) = std::mem::take(&mut self.state.pending)
            .into_iter()
            .partition(|p| p.due_tick <= tick);
        self.state.pending = later;
        let mut due = due;
        let order = |id: &AgentId| self.pop.agent_index(id).unwrap_or(usize::MAX);
        due.sort_by(|a, b| {
            (a.due_tick, order(&a.investor), a.committed_tick, &a.rule_id).cmp(&(
                b.due_tick,
                order(&b.investor),
                b.committed_tick,
                &b.rule_id,
            ))
        });
        for d in due {
            let source = Source::Delivery {
                committed_tick: d.committed_tick,
            };
            let attempt = Attempt {
                rule_id: d.rule_id.clone(),
                holder: d.investor.clone(),
                counterparty: d.counterparty.clone(),
            };
            self.try_attempts(tick, &source, &[attempt], ctx, events);
        }
    }

    fn standing_proposals(&self, idx: usize) -> Vec<(Source, Proposal)> {
        let agent = &self.pop.agents()[idx];
        let mut rules: Vec<_> = self
            .pop
            .rules
            .iter()
            .filter(|r| r.standing && r.holder.matches(agent))
            .collect();
        rules.sort_by(|a, b| a.id.cmp(&b.id));
        rules
            .into_iter()
            .map(|r| {
                let attempts = if r.is_exchange() {
                    self.pop
                        .parties()
                        .filter(|p| p.id != agent.id && r.counterparty.matches(p))
                        .map(|p| Attempt {
                            rule_id: r.id.clone(),
                            holder: agent.id.clone(),
                            counterparty: p.id.clone(),
                        })
                        .collect()
                } else {
                    vec![Attempt {
                        rule_id: r.id.clone(),
                        holder: agent.id.clone(),
                        counterparty: agent.id.clone(),
                    }]
                };
                (
                    Source::Standing,
                    Proposal {
                        proposer: agent.id.clone(),
                        class: r.requested_class().unwrap_or(ResourceClass::Goods),
                        attempts,
                        on_success: None,
                    },
                )
            })
            .collect()
    }

    fn resolve(
        &mut self,
        tick: u32,
        _snapshot: &Snapshot,
        mut strategic: BTreeMap<usize, Vec<(Source, Proposal)>>,
        ctx: &mut ExchangeContext,
        events: &mut Vec<Event>,
    ) {
        for idx in 0..self.pop.agents().len() {
            let mut queue = self.standing_proposals(idx);
            queue.extend(strategic.remove(&idx).unwrap_or_default());
            for (source, proposal) in queue {
                if proposal.attempts.is_empty() {
                    events.push(Event::OutcomeFailed {
                        tick,
                        source,
                        outcome: ExchangeOutcome::no_applicable_rule(proposal.proposer.clone()),
                    });
                    continue;
                }
                let done = self.try_attempts(tick, &source, &proposal.attempts, ctx, events);
                if let (Some(out), Some(delivery)) = (done, &proposal.on_success) {
                    if out.is_success() {
                        let counterparty = out.counterparty.clone().expect("exchange outcome");
                        let due_tick = tick + delivery.maturity;
                        events.push(Event::PromiseScheduled {
                            tick,
                            investor: out.holder.clone(),
                            counterparty: counterparty.clone(),
                            rule_id: delivery.delivery_rule.clone(),
                            due_tick,
                        });
                        self.state.pending.push(PendingDelivery {
                            due_tick,
                            committed_tick: tick,
                            investor: out.holder.clone(),
                            counterparty,
                            rule_id: delivery.delivery_rule.clone(),
                        });
                    }
                }
            }
        }
    }

    /// Tries attempts in order and commits the first success. Failing that,
    /// the first committable failure is committed. Returns what was committed.
    fn try_attempts(
        &mut self,
        tick: u32,
        source: &Source,
        attempts: &[Attempt],
        ctx: &mut ExchangeContext,
        events: &mut Vec<Event>,
    ) -> Option<ExchangeOutcome> {
        let mut fallback: Option<ExchangeOutcome> = None;
        let mut chosen = None;
        for a in attempts {
            let Some(rule) = self.pop.rule(&a.rule_id).cloned() else {
                events.push(Event::EvaluationError {
                    tick,
                    source: source.clone(),
                    rule_id: a.rule_id.clone(),
                    holder: a.holder.clone(),
                    counterparty: a.counterparty.clone(),
                    message: format!("unknown rule `{}`", a.rule_id),
                });
                continue;
            };
            let result = if rule.is_exchange() {
                entitlement::evaluate(&rule, &a.holder, &a.counterparty, &self.pop, ctx)
            } else {
                entitlement::assert_ownership(&rule, &a.holder, &self.pop)
            };
            let outcome = match result {
                Ok(o) => o,
                Err(e) => {
                    events.push(Event::EvaluationError {
                        tick,
                        source: source.clone(),
                        rule_id: a.rule_id.clone(),
                        holder: a.holder.clone(),
                        counterparty: a.counterparty.clone(),
                        message: e.to_string(),
                    });
                    continue;
                }
            };
            if outcome.is_success() {
                chosen = Some(outcome);
                break;
            }
            if fallback.is_none() && outcome.committable(ctx.partial_commit) {
                fallback = Some(outcome);
            } else {
                events.push(Event::OutcomeFailed {
                    tick,
                    source: source.clone(),
                    outcome,
                });
            }
        }
        let outcome = chosen.or(fallback)?;
        match entitlement::apply(&outcome, &mut self.pop, ctx.partial_commit) {
            Ok(()) => {
                if let Some(rule) = &outcome.rule_id {
                    *ctx.uses.entry(rule.clone()).or_insert(0) += 1;
                }
                let event = Event::OutcomeCommitted {
                    tick,
                    source: source.clone(),
                    outcome: outcome.clone(),
                };
                events.push(event);
                Some(outcome)
            }
            Err(e) => {
                events.push(Event::EvaluationError {
                    tick,
                    source: source.clone(),
                    rule_id: outcome.rule_id.clone().unwrap_or_default(),
                    holder: outcome.holder.clone(),
                    counterparty: outcome
                        .counterparty
                        .clone()
                        .unwrap_or_else(|| outcome.holder.clone()),
                    message: e.to_string(),
                });
                None
            }
        }
    }

    fn apply_mutations(
        &mut self,
        tick: u32,
        mutations: &[(u8, Mutation)],
        events: &mut Vec<Event>,
    ) -> BTreeMap<String, i64> {
        let mut flagged = BTreeMap::new();
        for (cell, m) in mutations {
            match m {
                Mutation::Hoard { .. } => {}
                Mutation::SetBand { agent, class, band } => {
                    if let Some(req) = self
                        .pop
                        .party_mut(agent)
                        .and_then(|a| a.requirements.get_mut(class))
                    {
                        req.band = Some(*band);
                        events.push(Event::RequirementAdjusted {
                            tick,
                            agent: agent.clone(),
                            class: *class,
                            band: *band,
                        });
                    }
                }
                Mutation::Destroy {
                    agent,
                    class,
                    kind,
                    count,
                } => {
                    let Some(party) = self.pop.party_mut(agent) else {
                        continue;
                    };
                    let victims =
                        destruction_targets(&party.holdings, *class, kind.as_ref(), *count);
                    for (item, n) in victims {
                        party
                            .holdings
                            .remove_in_place(&item, n)
                            .expect("targets come from holdings");
                        *flagged
                            .entry(format!("{}:{}", item.class, item.kind))
                            .or_insert(0) -= n as i64;
                        events.push(Event::NonConservingEvent {
                            tick,
                            agent: agent.clone(),
                            cell: *cell,
                            item,
                            delta: -(n as i64),
                        });
                    }
                }
            }
        }
        flagged
    }
}

/// Items to destroy: the most plentiful matching items first, ties by item order.
fn destruction_targets(
    holdings: &Multiset<ResourceItem>,
    class: ResourceClass,
    kind: Option<&Kind>,
    count: u64,
) -> Vec<(ResourceItem, u64)> {
    let mut candidates: Vec<(&ResourceItem, u64)> = holdings
        .iter()
        .filter(|(i, _)| i.class == class && kind.is_none_or(|k| &i.kind == k))
        .map(|(i, n)| (i, *n))
        .collect();
    candidates.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let mut left = count;
    let mut out = Vec::new();
    for (item, n) in candidates {
        if left == 0 {
            break;
        }
        let take = n.min(left);
        out.push((item.clone(), take));
        left -= take;
    }
    out
}

/// One tick as a value transformation.
pub fn step(
    pop: &Population,
    config: &SimConfig,
    state: &EngineState,
) -> (Population, Vec<Event>, EngineState) {
    let mut sim = Simulation {
        pop: pop.clone(),
        config: config.clone(),
        state: state.clone(),
    };
    let result = sim.step();
    (sim.pop, result.events, sim.state)
}

/// Runs up to `config.ticks` ticks, stopping early when any stop condition holds.
pub fn run(pop: Population, config: SimConfig) -> Result<SimReport, EngineError> {
    run_named(pop, config, "")
}

pub fn run_named(pop: Population, config: SimConfig, name: &str) -> Result<SimReport, EngineError> {
    let mut sim = Simulation::new(pop, config.clone())?;
    let mut builder = report::ReportBuilder::new(name, &config);
    let mut stopped_early = false;
    for t in 0..config.ticks {
        let result = sim.step();
        builder.record_tick(&result);
        let post = sim.snapshot();
        if config.stop_conditions.iter().any(|c| c.holds(&post)) && t + 1 < config.ticks {
            stopped_early = true;
            break;
        }
    }
    let ticks_run = sim.state().tick;
    Ok(builder.finish(ticks_run, sim.population(), config.mode, stopped_early))
}
