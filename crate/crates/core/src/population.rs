//! Agents, the closed system they form, and its aggregate view.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{
    self, classify, cross_classify, CountMode, CrossState, SasState, SufficiencyBand,
};
use crate::entitlement::EntitlementRule;
use crate::multiset::Multiset;
use crate::resource::{ResourceClass, ResourceItem, SubstitutionPolicy, DEFAULT_CONTEXT};
use crate::strategy::StrategyProfile;

/// Reserved id of the pseudo-agent standing for the generalized system
/// counterparty (a market pool, a welfare state).
pub const RESERVOIR_ID: &str = "reservoir";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(String);

impl AgentId {
    pub fn new(id: impl Into<String>) -> Self {
        AgentId(id.into())
    }

    pub fn reservoir() -> Self {
        AgentId(RESERVOIR_ID.to_string())
    }

    pub fn is_reservoir(&self) -> bool {
        self.0 == RESERVOIR_ID
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for AgentId {
    fn from(s: &str) -> Self {
        AgentId::new(s)
    }
}

impl From<String> for AgentId {
    fn from(s: String) -> Self {
        AgentId(s)
    }
}

/// A declared requirement relation for one class.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Requirement {
    pub items: Multiset<ResourceItem>,
    /// Optimal range for holdings; `None` means exactly `|items|`.
    pub band: Option<SufficiencyBand>,
    /// Substitution context used in coverage mode.
    pub context: String,
}

impl Requirement {
    pub fn new(items: Multiset<ResourceItem>) -> Self {
        Self {
            items,
            band: None,
            context: DEFAULT_CONTEXT.to_string(),
        }
    }

    /// An explicitly declared empty requirement (`R = {}`), which is a
    /// defined relation, unlike an absent one.
    pub fn none() -> Self {
        Self::new(Multiset::new())
    }

    pub fn effective_band(&self) -> SufficiencyBand {
        self.band
            .unwrap_or_else(|| SufficiencyBand::exact(self.items.cardinality()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Agent {
    pub id: AgentId,
    pub requirements: BTreeMap<ResourceClass, Requirement>,
    pub holdings: Multiset<ResourceItem>,
    pub profile: Option<StrategyProfile>,
    pub attributes: BTreeMap<String, String>,
}

impl Agent {
    pub fn new(id: impl Into<AgentId>) -> Self {
        Self {
            id: id.into(),
            requirements: BTreeMap::new(),
            holdings: Multiset::new(),
            profile: None,
            attributes: BTreeMap::new(),
        }
    }

    pub fn require(mut self, class: ResourceClass, req: Requirement) -> Self {
        self.requirements.insert(class, req);
        self
    }

    pub fn hold(mut self, item: ResourceItem, n: u64) -> Self {
        self.holdings.insert(item, n);
        self
    }

    pub fn attribute(mut self, key: &str, value: &str) -> Self {
        self.attributes.insert(key.to_string(), value.to_string());
        self
    }

    pub fn with_profile(mut self, profile: StrategyProfile) -> Self {
        self.profile = Some(profile);
        self
    }

    pub fn holdings_in(&self, class: ResourceClass) -> Multiset<ResourceItem> {
        self.holdings.filtered(|i| i.class == class)
    }

    /// Requirement items of every declared class, bag-summed.
    pub fn all_requirements(&self) -> Multiset<ResourceItem> {
        let mut out = Multiset::new();
        for req in self.requirements.values() {
            out.absorb(&req.items);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PopulationError {
    #[error("a population needs at least one agent")]
    Empty,
    #[error("duplicate agent id `{0}`")]
    DuplicateId(AgentId),
    #[error("agent id `{0}` is reserved for the reservoir")]
    ReservedId(AgentId),
    #[error("the reservoir must be identified as `{RESERVOIR_ID}`, found `{0}`")]
    BadReservoirId(AgentId),
    #[error("the reservoir cannot declare requirements")]
    ReservoirRequirements,
    #[error("no agent with id `{0}`")]
    UnknownAgent(AgentId),
}

/// A closed system of agents plus the rules that govern their exchanges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Population {
    agents: Vec<Agent>,
    pub rules: Vec<EntitlementRule>,
    reservoir: Option<Agent>,
    pub policy: SubstitutionPolicy,
    /// Optional system-level bands; absent classes use exact equality.
    pub system_bands: BTreeMap<ResourceClass, SufficiencyBand>,
}

impl Population {
    pub fn new(
        agents: Vec<Agent>,
        rules: Vec<EntitlementRule>,
        reservoir: Option<Agent>,
    ) -> Result<Self, PopulationError> {
        if agents.is_empty() {
            return Err(PopulationError::Empty);
        }
        let mut seen = BTreeSet::new();
        for a in &agents {
            if a.id.is_reservoir() {
                return Err(PopulationError::ReservedId(a.id.clone()));
            }
            if !seen.insert(&a.id) {
                return Err(PopulationError::DuplicateId(a.id.clone()));
            }
        }
        if let Some(r) = &reservoir {
            if !r.id.is_reservoir() {
                return Err(PopulationError::BadReservoirId(r.id.clone()));
            }
            if !r.requirements.is_empty() {
                return Err(PopulationError::ReservoirRequirements);
            }
        }
        Ok(Self {
            agents,
            rules,
            reservoir,
            policy: SubstitutionPolicy::default(),
            system_bands: BTreeMap::new(),
        })
    }

    pub fn with_policy(mut self, policy: SubstitutionPolicy) -> Self {
        self.policy = policy;
        self
    }

    /// Agents in deterministic tie-break order.
    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn reservoir(&self) -> Option<&Agent> {
        self.reservoir.as_ref()
    }

    pub fn has_reservoir(&self) -> bool {
        self.reservoir.is_some()
    }

    /// Agents followed by the reservoir, if any.
    pub fn parties(&self) -> impl Iterator<Item = &Agent> {
        self.agents.iter().chain(self.reservoir.iter())
    }

    pub fn party(&self, id: &AgentId) -> Option<&Agent> {
        if id.is_reservoir() {
            return self.reservoir.as_ref();
        }
        self.agents.iter().find(|a| &a.id == id)
    }

    pub fn party_mut(&mut self, id: &AgentId) -> Option<&mut Agent> {
        if id.is_reservoir() {
            return self.reservoir.as_mut();
        }
        self.agents.iter_mut().find(|a| &a.id == id)
    }

    pub fn agent_index(&self, id: &AgentId) -> Option<usize> {
        self.agents.iter().position(|a| &a.id == id)
    }

    pub fn rule(&self, id: &str) -> Option<&EntitlementRule> {
        self.rules.iter().find(|r| r.id == id)
    }

    /// Every holding in the system, reservoir included.
    pub fn total_holdings(&self) -> Multiset<ResourceItem> {
        let mut out = Multiset::new();
        for p in self.parties() {
            out.absorb(&p.holdings);
        }
        out
    }

    /// Drops an agent, returning it. The population must keep at least one agent.
    pub fn remove_agent(&mut self, id: &AgentId) -> Result<Agent, PopulationError> {
        if self.agents.len() == 1 {
            return Err(PopulationError::Empty);
        }
        let idx = self
            .agent_index(id)
            .ok_or_else(|| PopulationError::UnknownAgent(id.clone()))?;
        Ok(self.agents.remove(idx))
    }
}

/// Aggregate requirement and resource sets of the whole system.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SystemView {
    pub requirements: BTreeMap<ResourceClass, Multiset<ResourceItem>>,
    pub resources: BTreeMap<ResourceClass, Multiset<ResourceItem>>,
    /// Classes for which at least one agent declares a requirement relation.
    pub declared: BTreeSet<ResourceClass>,
    /// Substitution contexts of the declared requirements, per class.
    pub contexts: BTreeMap<ResourceClass, BTreeSet<String>>,
}

impl SystemView {
    pub fn requirements_in(&self, class: ResourceClass) -> Multiset<ResourceItem> {
        self.requirements.get(&class).cloned().unwrap_or_default()
    }

    pub fn resources_in(&self, class: ResourceClass) -> Multiset<ResourceItem> {
        self.resources.get(&class).cloned().unwrap_or_default()
    }

    /// System state of a class from the plain aggregates; `Undefined` when no
    /// agent declares a requirement in it.
    pub fn state(&self, class: ResourceClass, band: Option<&SufficiencyBand>) -> SasState {
        if !self.declared.contains(&class) {
            return SasState::Undefined;
        }
        let required = self.requirements_in(class).cardinality();
        let available = self.resources_in(class).cardinality();
        classify(required, available, band).expect("system bands are validated")
    }

    /// `|A_s|` counted in `mode`. In coverage mode `A_s` is matched against
    /// `R_s` in the shared context of the class's requirements (the default
    /// context when they disagree).
    pub fn available_in(
        &self,
        class: ResourceClass,
        mode: CountMode,
        policy: &SubstitutionPolicy,
    ) -> u64 {
        let context = match self.contexts.get(&class) {
            Some(c) if c.len() == 1 => c.iter().next().expect("one context").as_str(),
            _ => DEFAULT_CONTEXT,
        };
        classify::effective_available(
            &self.resources_in(class),
            &self.requirements_in(class),
            policy,
            context,
            mode,
        )
    }

    pub fn state_in(
        &self,
        class: ResourceClass,
        band: Option<&SufficiencyBand>,
        mode: CountMode,
        policy: &SubstitutionPolicy,
    ) -> SasState {
        if !self.declared.contains(&class) {
            return SasState::Undefined;
        }
        let required = self.requirements_in(class).cardinality();
        let available = self.available_in(class, mode, policy);
        classify(required, available, band).expect("system bands are validated")
    }
}

/// Bag-sums requirements (agents only) and resources (agents and reservoir) per class.
pub fn aggregate(pop: &Population) -> SystemView {
    let mut view = SystemView::default();
    for agent in pop.agents() {
        for (class, req) in &agent.requirements {
            view.declared.insert(*class);
            view.contexts
                .entry(*class)
                .or_default()
                .insert(req.context.clone());
            view.requirements
                .entry(*class)
                .or_default()
                .absorb(&req.items);
        }
    }
    for party in pop.parties() {
        for (item, n) in &party.holdings {
            view.resources
                .entry(item.class)
                .or_default()
                .insert(item.clone(), *n);
        }
    }
    view
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassReading {
    pub state: SasState,
    pub cross: CrossState,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentReading {
    pub agent: AgentId,
    pub classes: BTreeMap<ResourceClass, ClassReading>,
}

/// Individual and system states at one instant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub agents: Vec<AgentReading>,
    pub system: BTreeMap<ResourceClass, SasState>,
}

impl Snapshot {
    pub fn agent(&self, id: &AgentId) -> Option<&AgentReading> {
        self.agents.iter().find(|a| &a.agent == id)
    }

    pub fn reading(&self, id: &AgentId, class: ResourceClass) -> Option<ClassReading> {
        self.agent(id).and_then(|a| a.classes.get(&class).copied())
    }

    pub fn state(&self, id: &AgentId, class: ResourceClass) -> SasState {
        self.reading(id, class)
            .map_or(SasState::Undefined, |r| r.state)
    }

    pub fn class_states(&self, id: &AgentId) -> BTreeMap<ResourceClass, SasState> {
        self.agent(id)
            .map(|a| a.classes.iter().map(|(c, r)| (*c, r.state)).collect())
            .unwrap_or_default()
    }
}

/// Classifies every agent and the system, and cross-classifies each agent class.
pub fn snapshot_states(pop: &Population, mode: CountMode) -> Snapshot {
    let view = aggregate(pop);
    let system: BTreeMap<_, _> = ResourceClass::ALL
        .into_iter()
        .map(|c| {
            (
                c,
                view.state_in(c, pop.system_bands.get(&c), mode, &pop.policy),
            )
        })
        .collect();
    let agents = pop
        .agents()
        .iter()
        .map(|agent| {
            let classes = classify::classify_agent(agent, &pop.policy, mode)
                .into_iter()
                .map(|(class, state)| {
                    let cross = cross_classify(state, system[&class]);
                    (class, ClassReading { state, cross })
                })
                .collect();
            AgentReading {
                agent: agent.id.clone(),
                classes,
            }
        })
        .collect();
    Snapshot { agents, system }
}
