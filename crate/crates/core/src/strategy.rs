//! The coping-strategy grid: four stances crossed with the three defined
//! resource states, each cell bound to a recipe of effect primitives.
//!
//! Cell labels are names, not algorithms. The built-in recipes below are the
//! defaults; scenarios override them per cell through [`StrategyProfile`].
//!
//! | stance    | scarcity                     | abundance                 | sufficiency                  |
//! |-----------|------------------------------|---------------------------|------------------------------|
//! | defensive | 1 propose obtaining exchange | 2 propose surrendering    | 3 hoard                      |
//! | reactive  | 4 lower requirement band     | 5 annotate only           | 6 destroy one unit           |
//! | adaptive  | 7 propose obtaining exchange | 8 annotate only           | 9 annotate only              |
//! | creative  | 10 annotate only             | 11 destroy one unit       | 12 give away to the scarce   |

use std::collections::BTreeMap;
use std::fmt;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classify::{SasState, SufficiencyBand};
use crate::entitlement::{EntitlementRule, EntitlementType};
use crate::population::{Agent, AgentId, Population, Snapshot};
use crate::resource::{Kind, ResourceClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stance {
    /// Avoid the state.
    Defensive,
    /// Reduce it.
    Reactive,
    /// Embrace it.
    Adaptive,
    /// Inflate it.
    Creative,
}

impl Stance {
    pub const ALL: [Stance; 4] = [
        Stance::Defensive,
        Stance::Reactive,
        Stance::Adaptive,
        Stance::Creative,
    ];
}

impl fmt::Display for Stance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stance::Defensive => "defensive",
            Stance::Reactive => "reactive",
            Stance::Adaptive => "adaptive",
            Stance::Creative => "creative",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleSelector {
    Id(String),
    /// Exchange rules that supply the coping class to the holder.
    Obtaining,
    /// Exchange rules that take the coping class from the holder.
    Surrendering,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartySelector {
    /// Every party the rule's own predicate admits.
    RuleDefault,
    Reservoir,
    Id(AgentId),
    /// Agents whose state in the coping class is this one, on the tick snapshot.
    InState(SasState),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adjustment {
    /// Shift both band bounds by this many units.
    Delta(i64),
    Band(SufficiencyBand),
}

/// Effect primitives. `class: None` means the class the cell was selected for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "effect", rename_all = "snake_case")]
pub enum EffectPrimitive {
    AdjustRequirement {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        class: Option<ResourceClass>,
        adjustment: Adjustment,
    },
    DestroyResources {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        class: Option<ResourceClass>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kind: Option<Kind>,
        count: u64,
    },
    HoardResources {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        class: Option<ResourceClass>,
    },
    ProposeExchange {
        rule: RuleSelector,
        #[serde(default = "rule_default")]
        counterparty: PartySelector,
    },
    /// Commit now for a promise, with delivery evaluated `maturity` ticks later.
    Invest {
        commit_rule: String,
        delivery_rule: String,
        maturity: u32,
    },
    GiveAway {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        class: Option<ResourceClass>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kind: Option<Kind>,
        #[serde(default = "scarce_recipients")]
        recipient: PartySelector,
    },
    /// Log-only placeholder for cells without an exchange reading.
    Annotate { note: String },
}

fn rule_default() -> PartySelector {
    PartySelector::RuleDefault
}

fn scarce_recipients() -> PartySelector {
    PartySelector::InState(SasState::Scarcity)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyCell {
    /// 1..=12, row-major over stances and (scarcity, abundance, sufficiency).
    pub number: u8,
    pub stance: Stance,
    pub state: SasState,
    pub label: String,
    pub effects: Vec<EffectPrimitive>,
}

const COLUMNS: [SasState; 3] = [
    SasState::Scarcity,
    SasState::Abundance,
    SasState::Sufficiency,
];

/// All twelve cells with their built-in recipes.
pub fn catalog() -> Vec<StrategyCell> {
    use EffectPrimitive::*;
    let note = |s: &str| {
        vec![Annotate {
            note: s.to_string(),
        }]
    };
    let obtain = || {
        vec![ProposeExchange {
            rule: RuleSelector::Obtaining,
            counterparty: PartySelector::RuleDefault,
        }]
    };
    let table: [(&str, Vec<EffectPrimitive>); 12] = [
        ("debt", obtain()),
        (
            "market efficiency",
            vec![ProposeExchange {
                rule: RuleSelector::Surrendering,
                counterparty: PartySelector::RuleDefault,
            }],
        ),
        ("greed, gluttony", vec![HoardResources { class: None }]),
        (
            "protestant work ethic, simplifying, austerity",
            vec![AdjustRequirement {
                class: None,
                adjustment: Adjustment::Delta(-1),
            }],
        ),
        ("homophily, stereotypes", note("homophily, stereotypes")),
        (
            "opulence, self-destructive behavior",
            vec![DestroyResources {
                class: None,
                kind: None,
                count: 1,
            }],
        ),
        ("innovation", obtain()),
        (
            "serialism, multiculturalism",
            note("serialism, multiculturalism"),
        ),
        (
            "modesty, frugality, environmentalism",
            note("modesty, frugality, environmentalism"),
        ),
        (
            "sadism, masochism, ritual sacrifice, speculation",
            note("sadism, masochism, ritual sacrifice, speculation"),
        ),
        (
            "lavishness, the sacred, feasting",
            vec![DestroyResources {
                class: None,
                kind: None,
                count: 1,
            }],
        ),
        (
            "generosity, charity",
            vec![GiveAway {
                class: None,
                kind: None,
                recipient: scarce_recipients(),
            }],
        ),
    ];
    table
        .into_iter()
        .enumerate()
        .map(|(i, (label, effects))| StrategyCell {
            number: i as u8 + 1,
            stance: Stance::ALL[i / 3],
            state: COLUMNS[i % 3],
            label: label.to_string(),
            effects,
        })
        .collect()
}

/// The built-in cell for `(stance, state)`; `None` for `Undefined`.
pub fn cell(stance: Stance, state: SasState) -> Option<StrategyCell> {
    catalog()
        .into_iter()
        .find(|c| c.stance == stance && c.state == state)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellOverride {
    pub stance: Stance,
    pub state: SasState,
    pub effects: Vec<EffectPrimitive>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightedStance {
    pub stance: Stance,
    pub weight: u32,
}

fn default_respond_to() -> Vec<SasState> {
    vec![SasState::Scarcity, SasState::Abundance]
}

fn default_salience() -> Vec<SasState> {
    vec![
        SasState::Scarcity,
        SasState::Abundance,
        SasState::Sufficiency,
    ]
}

fn default_class_order() -> Vec<ResourceClass> {
    vec![
        ResourceClass::Goods,
        ResourceClass::Money,
        ResourceClass::Service,
        ResourceClass::Information,
        ResourceClass::Status,
        ResourceClass::Love,
    ]
}

/// How an agent copes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyProfile {
    pub stance: Stance,
    /// When non-empty, the stance is drawn from these weights each tick.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stance_weights: Vec<WeightedStance>,
    /// States that trigger any action. Sufficiency is left out by default:
    /// holdings inside the band cause no arousal.
    #[serde(default = "default_respond_to")]
    pub respond_to: Vec<SasState>,
    #[serde(default = "default_salience")]
    pub salience: Vec<SasState>,
    #[serde(default = "default_class_order")]
    pub class_order: Vec<ResourceClass>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<CellOverride>,
}

impl StrategyProfile {
    pub fn new(stance: Stance) -> Self {
        Self {
            stance,
            stance_weights: Vec::new(),
            respond_to: default_respond_to(),
            salience: default_salience(),
            class_order: default_class_order(),
            overrides: Vec::new(),
        }
    }

    pub fn responding_to(mut self, states: &[SasState]) -> Self {
        self.respond_to = states.to_vec();
        self
    }

    pub fn with_override(
        mut self,
        stance: Stance,
        state: SasState,
        effects: Vec<EffectPrimitive>,
    ) -> Self {
        self.overrides
            .retain(|o| !(o.stance == stance && o.state == state));
        self.overrides.push(CellOverride {
            stance,
            state,
            effects,
        });
        self
    }

    pub fn with_weights(mut self, weights: &[(Stance, u32)]) -> Self {
        self.stance_weights = weights
            .iter()
            .map(|(stance, weight)| WeightedStance {
                stance: *stance,
                weight: *weight,
            })
            .collect();
        self
    }

    pub fn is_stochastic(&self) -> bool {
        self.stance_weights.iter().filter(|w| w.weight > 0).count() > 1
    }

    /// The cell for `(stance, state)` with this profile's overrides applied.
    pub fn resolve(&self, stance: Stance, state: SasState) -> Option<StrategyCell> {
        let mut c = cell(stance, state)?;
        if let Some(o) = self
            .overrides
            .iter()
            .find(|o| o.stance == stance && o.state == state)
        {
            c.effects = o.effects.clone();
        }
        Some(c)
    }

    fn draw_stance(&self, rng: &mut impl Rng) -> Stance {
        let live: Vec<&WeightedStance> = self
            .stance_weights
            .iter()
            .filter(|w| w.weight > 0)
            .collect();
        match live.len() {
            0 => self.stance,
            1 => live[0].stance,
            _ => {
                let dist =
                    WeightedIndex::new(live.iter().map(|w| w.weight)).expect("positive weights");
                live[dist.sample(rng)].stance
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub class: ResourceClass,
    pub cell: StrategyCell,
}

/// Picks the most salient `(class, state)` the profile responds to and the
/// cell for it. The rng is consulted only for weighted stances.
pub fn select(
    class_states: &BTreeMap<ResourceClass, SasState>,
    profile: &StrategyProfile,
    rng: &mut impl Rng,
) -> Option<Selection> {
    let rank = |state: &SasState| {
        profile
            .salience
            .iter()
            .position(|s| s == state)
            .unwrap_or(usize::MAX)
    };
    let class_rank = |class: &ResourceClass| {
        profile
            .class_order
            .iter()
            .position(|c| c == class)
            .unwrap_or(usize::MAX)
    };
    let (class, state) = class_states
        .iter()
        .filter(|(_, s)| s.is_defined() && profile.respond_to.contains(s))
        .min_by_key(|(c, s)| (rank(s), class_rank(c), **c))?;
    let stance = profile.draw_stance(rng);
    let cell = profile.resolve(stance, *state)?;
    Some(Selection {
        class: *class,
        cell,
    })
}

/// One way of carrying out a proposal: rule, holder and counterparty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attempt {
    pub rule_id: String,
    pub holder: AgentId,
    pub counterparty: AgentId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Delivery {
    pub delivery_rule: String,
    pub maturity: u32,
}

/// An exchange an agent wants. Attempts are tried in order and the first
/// success is committed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proposal {
    pub proposer: AgentId,
    pub class: ResourceClass,
    pub attempts: Vec<Attempt>,
    /// Scheduled when the proposal succeeds (investments).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub on_success: Option<Delivery>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mutation", rename_all = "snake_case")]
pub enum Mutation {
    SetBand {
        agent: AgentId,
        class: ResourceClass,
        band: SufficiencyBand,
    },
    Destroy {
        agent: AgentId,
        class: ResourceClass,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kind: Option<Kind>,
        count: u64,
    },
    Hoard {
        agent: AgentId,
        class: ResourceClass,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Enactment {
    pub proposals: Vec<Proposal>,
    pub mutations: Vec<Mutation>,
    pub annotations: Vec<String>,
}

fn counterparties(
    rule: &EntitlementRule,
    selector: &PartySelector,
    exclude: &AgentId,
    class: ResourceClass,
    pop: &Population,
    snapshot: &Snapshot,
) -> Vec<AgentId> {
    pop.parties()
        .filter(|p| &p.id != exclude && rule.counterparty.matches(p))
        .filter(|p| match selector {
            PartySelector::RuleDefault => true,
            PartySelector::Reservoir => p.id.is_reservoir(),
            PartySelector::Id(id) => &p.id == id,
            PartySelector::InState(s) => snapshot.state(&p.id, class) == *s,
        })
        .map(|p| p.id.clone())
        .collect()
}

fn sorted_rules(
    pop: &Population,
    keep: impl Fn(&EntitlementRule) -> bool,
) -> Vec<&EntitlementRule> {
    let mut rules: Vec<_> = pop
        .rules
        .iter()
        .filter(|r| r.is_exchange() && keep(r))
        .collect();
    rules.sort_by(|a, b| a.id.cmp(&b.id));
    rules
}

/// Turns a selected cell into proposals and self-directed mutations.
///
/// Nothing here touches holdings: every movement between parties is left to
/// entitlement evaluation.
pub fn enact(
    selection: &Selection,
    agent: &Agent,
    pop: &Population,
    snapshot: &Snapshot,
) -> Enactment {
    let mut out = Enactment::default();
    let coping = selection.class;
    for effect in &selection.cell.effects {
        match effect {
            EffectPrimitive::AdjustRequirement { class, adjustment } => {
                let class = class.unwrap_or(coping);
                if let Some(req) = agent.requirements.get(&class) {
                    let band = match adjustment {
                        Adjustment::Delta(d) => req.effective_band().shifted(*d),
                        Adjustment::Band(b) => *b,
                    };
                    out.mutations.push(Mutation::SetBand {
                        agent: agent.id.clone(),
                        class,
                        band,
                    });
                }
            }
            EffectPrimitive::DestroyResources { class, kind, count } => {
                out.mutations.push(Mutation::Destroy {
                    agent: agent.id.clone(),
                    class: class.unwrap_or(coping),
                    kind: kind.clone(),
                    count: *count,
                })
            }
            EffectPrimitive::HoardResources { class } => out.mutations.push(Mutation::Hoard {
                agent: agent.id.clone(),
                class: class.unwrap_or(coping),
            }),
            EffectPrimitive::ProposeExchange { rule, counterparty } => {
                let rules = sorted_rules(pop, |r| {
                    r.holder.matches(agent)
                        && match rule {
                            RuleSelector::Id(id) => &r.id == id,
                            RuleSelector::Obtaining => {
                                r.obtain.as_ref().is_some_and(|o| o.class == coping)
                            }
                            RuleSelector::Surrendering => {
                                r.surrender.as_ref().is_some_and(|s| s.class == coping)
                            }
                        }
                });
                let attempts = rules
                    .into_iter()
                    .flat_map(|r| {
                        counterparties(r, counterparty, &agent.id, coping, pop, snapshot)
                            .into_iter()
                            .map(|cp| Attempt {
                                rule_id: r.id.clone(),
                                holder: agent.id.clone(),
                                counterparty: cp,
                            })
                    })
                    .collect();
                out.proposals.push(Proposal {
                    proposer: agent.id.clone(),
                    class: coping,
                    attempts,
                    on_success: None,
                });
            }
            EffectPrimitive::Invest {
                commit_rule,
                delivery_rule,
                maturity,
            } => {
                let attempts = pop
                    .rule(commit_rule)
                    .filter(|r| r.is_exchange() && r.holder.matches(agent))
                    .map(|r| {
                        counterparties(
                            r,
                            &PartySelector::RuleDefault,
                            &agent.id,
                            coping,
                            pop,
                            snapshot,
                        )
                        .into_iter()
                        .map(|cp| Attempt {
                            rule_id: r.id.clone(),
                            holder: agent.id.clone(),
                            counterparty: cp,
                        })
                        .collect()
                    })
                    .unwrap_or_default();
                out.proposals.push(Proposal {
                    proposer: agent.id.clone(),
                    class: coping,
                    attempts,
                    on_success: Some(Delivery {
                        delivery_rule: delivery_rule.clone(),
                        maturity: *maturity,
                    }),
                });
            }
            EffectPrimitive::GiveAway {
                class,
                kind,
                recipient,
            } => {
                let class = class.unwrap_or(coping);
                // The agent gives as counterparty of a gift rule held by the recipient.
                let rules = sorted_rules(pop, |r| {
                    r.etype == EntitlementType::Gift
                        && r.counterparty.matches(agent)
                        && r.obtain.as_ref().is_some_and(|o| {
                            o.class == class && kind.as_ref().is_none_or(|k| &o.kind == k)
                        })
                });
                let mut attempts = Vec::new();
                for p in pop.agents() {
                    if p.id == agent.id {
                        continue;
                    }
                    let wanted = match recipient {
                        PartySelector::RuleDefault => true,
                        PartySelector::Reservoir => false,
                        PartySelector::Id(id) => &p.id == id,
                        PartySelector::InState(s) => snapshot.state(&p.id, class) == *s,
                    };
                    if !wanted {
                        continue;
                    }
                    for r in rules.iter().filter(|r| r.holder.matches(p)) {
                        attempts.push(Attempt {
                            rule_id: r.id.clone(),
                            holder: p.id.clone(),
                            counterparty: agent.id.clone(),
                        });
                    }
                }
                out.proposals.push(Proposal {
                    proposer: agent.id.clone(),
                    class,
                    attempts,
                    on_success: None,
                });
            }
            EffectPrimitive::Annotate { note } => out.annotations.push(note.clone()),
        }
    }
    out
}
