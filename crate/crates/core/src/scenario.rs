//! Scenario files.
//!
//! A scenario is a JSON document holding the agents, the substitution
//! policy, the entitlement rules, an optional reservoir and the run
//! configuration. See `docs/scenario-schema.md` for the field reference.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::SufficiencyBand;
use crate::engine::{run_named, EngineError, SimConfig};
use crate::entitlement::{EntitlementRule, PartyMatch};
use crate::multiset::Multiset;
use crate::population::{Agent, AgentId, Population, PopulationError, Requirement, RESERVOIR_ID};
use crate::report::SimReport;
use crate::resource::{
    Kind, ResourceClass, ResourceItem, SubstitutionPolicy, SubstitutionRule, DEFAULT_CONTEXT,
};
use crate::strategy::{EffectPrimitive, PartySelector, RuleSelector, StrategyProfile};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    /// Malformed input, or a value the schema does not allow.
    #[error("schema error at {locus}: {message}")]
    Schema { locus: String, message: String },
    #[error("{field} refers to unknown {what} `{id}`")]
    DanglingReference {
        field: String,
        what: String,
        id: String,
    },
    #[error("duplicate {what} id `{id}`")]
    DuplicateId { what: String, id: String },
}

impl ScenarioError {
    fn schema(locus: impl Into<String>, message: impl ToString) -> Self {
        ScenarioError::Schema {
            locus: locus.into(),
            message: message.to_string(),
        }
    }

    fn dangling(field: impl Into<String>, what: &str, id: impl ToString) -> Self {
        ScenarioError::DanglingReference {
            field: field.into(),
            what: what.to_string(),
            id: id.to_string(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
}

fn one() -> u64 {
    1
}

fn is_one(n: &u64) -> bool {
    *n == 1
}

fn default_context() -> String {
    DEFAULT_CONTEXT.to_string()
}

fn is_default_context(c: &String) -> bool {
    c == DEFAULT_CONTEXT
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KindCount {
    pub kind: Kind,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub count: u64,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub tags: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItemCount {
    pub class: ResourceClass,
    pub kind: Kind,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub count: u64,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub tags: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequirementSpec {
    pub class: ResourceClass,
    /// May be empty: a declared requirement for nothing.
    #[serde(default)]
    pub items: Vec<KindCount>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<SufficiencyBand>,
    #[serde(
        default = "default_context",
        skip_serializing_if = "is_default_context"
    )]
    pub context: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub id: AgentId,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub requirements: Vec<RequirementSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub holdings: Vec<ItemCount>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attributes: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<StrategyProfile>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReservoirSpec {
    #[serde(default)]
    pub holdings: Vec<ItemCount>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportOptions {
    /// Keep the event log in `report.json`.
    #[serde(default = "yes")]
    pub events: bool,
    /// Also write `states.csv`.
    #[serde(default = "yes")]
    pub csv: bool,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            events: true,
            csv: true,
        }
    }
}

/// The document as written on disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    #[serde(default)]
    pub metadata: Metadata,
    pub agents: Vec<AgentSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub substitution: Vec<SubstitutionRule>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rules: Vec<EntitlementRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reservoir: Option<ReservoirSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub system_bands: BTreeMap<ResourceClass, SufficiencyBand>,
    #[serde(default)]
    pub config: SimConfig,
    #[serde(default)]
    pub report: ReportOptions,
}

/// A validated scenario, ready to run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub metadata: Metadata,
    pub population: Population,
    pub config: SimConfig,
    pub report: ReportOptions,
}

fn to_multiset(items: &[ItemCount], locus: &str) -> Result<Multiset<ResourceItem>, ScenarioError> {
    let mut out = Multiset::new();
    for (i, it) in items.iter().enumerate() {
        if it.count == 0 {
            return Err(ScenarioError::schema(
                format!("{locus}[{i}].count"),
                "count must be positive",
            ));
        }
        let item = ResourceItem {
            class: it.class,
            kind: it.kind.clone(),
            quality_tags: it.tags.clone(),
        };
        out.insert(item, it.count);
    }
    Ok(out)
}

fn from_multiset(items: &Multiset<ResourceItem>) -> Vec<ItemCount> {
    items
        .iter()
        .map(|(i, n)| ItemCount {
            class: i.class,
            kind: i.kind.clone(),
            count: *n,
            tags: i.quality_tags.clone(),
        })
        .collect()
}

fn build_agent(spec: &AgentSpec, idx: usize) -> Result<Agent, ScenarioError> {
    let locus = format!("agents[{idx}]");
    let mut agent = Agent::new(spec.id.clone());
    for (j, r) in spec.requirements.iter().enumerate() {
        let rl = format!("{locus}.requirements[{j}]");
        let mut items = Multiset::new();
        for (k, kc) in r.items.iter().enumerate() {
            if kc.count == 0 {
                return Err(ScenarioError::schema(
                    format!("{rl}.items[{k}].count"),
                    "count must be positive",
                ));
            }
            let item = ResourceItem {
                class: r.class,
                kind: kc.kind.clone(),
                quality_tags: kc.tags.clone(),
            };
            items.insert(item, kc.count);
        }
        let req = Requirement {
            items,
            band: r.band,
            context: r.context.clone(),
        };
        if agent.requirements.insert(r.class, req).is_some() {
            return Err(ScenarioError::schema(
                rl,
                format!("second requirement for class {}", r.class),
            ));
        }
    }
    agent.holdings = to_multiset(&spec.holdings, &format!("{locus}.holdings"))?;
    agent.attributes = spec.attributes.clone();
    agent.profile = spec.profile.clone();
    Ok(agent)
}

fn agent_spec(agent: &Agent) -> AgentSpec {
    AgentSpec {
        id: agent.id.clone(),
        requirements: agent
            .requirements
            .iter()
            .map(|(class, req)| RequirementSpec {
                class: *class,
                items: req
                    .items
                    .iter()
                    .map(|(i, n)| KindCount {
                        kind: i.kind.clone(),
                        count: *n,
                        tags: i.quality_tags.clone(),
                    })
                    .collect(),
                band: req.band,
                context: req.context.clone(),
            })
            .collect(),
        holdings: from_multiset(&agent.holdings),
        attributes: agent.attributes.clone(),
        profile: agent.profile.clone(),
    }
}

impl ScenarioFile {
    /// Checks references and builds the runnable form.
    pub fn validate(&self) -> Result<Scenario, ScenarioError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ScenarioError::schema(
                "schema_version",
                format!(
                    "unsupported version {} (expected {SCHEMA_VERSION})",
                    self.schema_version
                ),
            ));
        }
        let mut ids = BTreeSet::new();
        for a in &self.agents {
            if a.id.is_reservoir() {
                return Err(ScenarioError::schema(
                    "agents",
                    format!("`{RESERVOIR_ID}` is reserved; declare it under `reservoir`"),
                ));
            }
            if !ids.insert(a.id.clone()) {
                return Err(ScenarioError::DuplicateId {
                    what: "agent".into(),
                    id: a.id.to_string(),
                });
            }
        }
        let mut rule_ids = BTreeSet::new();
        for (i, r) in self.rules.iter().enumerate() {
            r.validate()
                .map_err(|e| ScenarioError::schema(format!("rules[{i}]"), e))?;
            if !rule_ids.insert(r.id.as_str()) {
                return Err(ScenarioError::DuplicateId {
                    what: "rule".into(),
                    id: r.id.clone(),
                });
            }
        }
        let has_reservoir = self.reservoir.is_some();
        let party_exists = |id: &AgentId| ids.contains(id) || (id.is_reservoir() && has_reservoir);
        for (i, r) in self.rules.iter().enumerate() {
            for (field, m) in [("holder", &r.holder), ("counterparty", &r.counterparty)] {
                let locus = format!("rules[{i}].{field}");
                if *m == PartyMatch::Reservoir && !has_reservoir {
                    return Err(ScenarioError::dangling(locus, "party", RESERVOIR_ID));
                }
                if let Some(id) = m.named_ids().iter().find(|id| !party_exists(id)) {
                    return Err(ScenarioError::dangling(locus, "agent", id));
                }
            }
        }
        for (i, a) in self.agents.iter().enumerate() {
            let Some(profile) = &a.profile else { continue };
            for (j, o) in profile.overrides.iter().enumerate() {
                for (k, e) in o.effects.iter().enumerate() {
                    let locus = format!("agents[{i}].profile.overrides[{j}].effects[{k}]");
                    let (rules, party): (Vec<&String>, Option<&PartySelector>) = match e {
                        EffectPrimitive::ProposeExchange { rule, counterparty } => (
                            match rule {
                                RuleSelector::Id(id) => vec![id],
                                _ => vec![],
                            },
                            Some(counterparty),
                        ),
                        EffectPrimitive::Invest {
                            commit_rule,
                            delivery_rule,
                            ..
                        } => (vec![commit_rule, delivery_rule], None),
                        EffectPrimitive::GiveAway { recipient, .. } => (vec![], Some(recipient)),
                        _ => (vec![], None),
                    };
                    if let Some(id) = rules.into_iter().find(|id| !rule_ids.contains(id.as_str())) {
                        return Err(ScenarioError::dangling(locus, "rule", id));
                    }
                    match party {
                        Some(PartySelector::Id(id)) if !party_exists(id) => {
                            return Err(ScenarioError::dangling(locus, "agent", id));
                        }
                        Some(PartySelector::Reservoir) if !has_reservoir => {
                            return Err(ScenarioError::dangling(locus, "party", RESERVOIR_ID));
                        }
                        _ => {}
                    }
                }
            }
        }
        self.config
            .validate()
            .map_err(|e| ScenarioError::schema("config.ticks", e))?;

        let agents = self
            .agents
            .iter()
            .enumerate()
            .map(|(i, a)| build_agent(a, i))
            .collect::<Result<Vec<_>, _>>()?;
        let reservoir = match &self.reservoir {
            Some(r) => {
                let mut res = Agent::new(AgentId::reservoir());
                res.holdings = to_multiset(&r.holdings, "reservoir.holdings")?;
                Some(res)
            }
            None => None,
        };
        let mut population =
            Population::new(agents, self.rules.clone(), reservoir).map_err(|e| match e {
                PopulationError::DuplicateId(id) => ScenarioError::DuplicateId {
                    what: "agent".into(),
                    id: id.to_string(),
                },
                other => ScenarioError::schema("agents", other),
            })?;
        population.policy = SubstitutionPolicy {
            rules: self.substitution.clone(),
        };
        population.system_bands = self.system_bands.clone();
        Ok(Scenario {
            metadata: self.metadata.clone(),
            population,
            config: self.config.clone(),
            report: self.report.clone(),
        })
    }
}

impl Scenario {
    pub fn to_file(&self) -> ScenarioFile {
        let pop = &self.population;
        ScenarioFile {
            schema_version: SCHEMA_VERSION,
            metadata: self.metadata.clone(),
            agents: pop.agents().iter().map(agent_spec).collect(),
            substitution: pop.policy.rules.clone(),
            rules: pop.rules.clone(),
            reservoir: pop.reservoir().map(|r| ReservoirSpec {
                holdings: from_multiset(&r.holdings),
            }),
            system_bands: pop.system_bands.clone(),
            config: self.config.clone(),
            report: self.report.clone(),
        }
    }

    pub fn name(&self) -> &str {
        &self.metadata.name
    }

    /// Runs with the scenario's own configuration.
    pub fn run(&self) -> Result<SimReport, EngineError> {
        run_named(self.population.clone(), self.config.clone(), self.name())
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| {
        ScenarioError::schema(format!("line {}, column {}", e.line(), e.column()), e)
    })?;
    file.validate()
}

/// Pretty-printed JSON with a trailing newline.
pub fn emit(scenario: &Scenario) -> String {
    let mut s =
        serde_json::to_string_pretty(&scenario.to_file()).expect("scenario is serializable");
    s.push('\n');
    s
}
