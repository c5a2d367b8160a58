//! Built-in scenarios: `richard_iii`, `protestant` and `famine`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::classify::SasState;
use crate::engine::SimConfig;
use crate::entitlement::{EntitlementRule, PartyMatch, TransferSpec};
use crate::population::{Agent, AgentId, Population, Requirement};
use crate::resource::{ResourceClass, ResourceItem};
use crate::scenario::{Metadata, ReportOptions, Scenario};
use crate::strategy::{EffectPrimitive, Stance, StrategyProfile};

pub const NAMES: [&str; 3] = ["richard_iii", "protestant", "famine"];

/// Merchant silk supply in the protestant scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Variant {
    /// The merchant has more silk than it needs.
    #[default]
    SystemAbundance,
    /// The merchant needs silk and has none.
    SystemScarcity,
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "system-abundance" => Ok(Variant::SystemAbundance),
            "system-scarcity" => Ok(Variant::SystemScarcity),
            other => Err(format!(
                "unknown variant `{other}` (expected system-abundance or system-scarcity)"
            )),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::SystemAbundance => "system-abundance",
            Variant::SystemScarcity => "system-scarcity",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FixtureOptions {
    /// Only meaningful for `protestant`.
    pub variant: Option<Variant>,
    /// Only meaningful for `famine`.
    pub food_coupons: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FixtureError {
    #[error("no fixture named `{0}` (available: richard_iii, protestant, famine)")]
    Unknown(String),
    #[error("option {option} does not apply to fixture `{fixture}`")]
    NotApplicable { fixture: String, option: String },
}

pub fn is_fixture(name: &str) -> bool {
    NAMES.contains(&name)
}

pub fn fixture(name: &str, opts: &FixtureOptions) -> Result<Scenario, FixtureError> {
    let not_applicable = |option: &str| FixtureError::NotApplicable {
        fixture: name.to_string(),
        option: option.to_string(),
    };
    if opts.variant.is_some() && name != "protestant" {
        return Err(not_applicable("--variant"));
    }
    if opts.food_coupons && name != "famine" {
        return Err(not_applicable("--food-coupons"));
    }
    match name {
        "richard_iii" => Ok(richard_iii()),
        "protestant" => Ok(protestant(opts.variant.unwrap_or_default())),
        "famine" => Ok(famine(opts.food_coupons)),
        other => Err(FixtureError::Unknown(other.to_string())),
    }
}

fn item(class: ResourceClass, kind: &str) -> ResourceItem {
    ResourceItem::new(class, kind).expect("fixture kinds are non-empty")
}

fn needs(class: ResourceClass, kinds: &[(&str, u64)]) -> Requirement {
    Requirement::new(kinds.iter().map(|(k, n)| (item(class, k), *n)).collect())
}

fn scenario(name: &str, description: &str, population: Population, ticks: u32) -> Scenario {
    Scenario {
        metadata: Metadata {
            name: name.to_string(),
            description: description.to_string(),
        },
        population,
        config: SimConfig {
            ticks,
            ..SimConfig::default()
        },
        report: ReportOptions::default(),
    }
}

/// A king short of a horse, with a kingdom he does not need.
pub fn richard_iii() -> Scenario {
    use ResourceClass::{Goods, Status};
    let richard = Agent::new("richard")
        .require(Goods, needs(Goods, &[("horse", 1)]))
        .require(Status, Requirement::none())
        .hold(item(Status, "kingship"), 1)
        .with_profile(StrategyProfile::new(Stance::Defensive).responding_to(&[SasState::Scarcity]));
    let rider = Agent::new("rider").hold(item(Goods, "horse"), 1);
    let trade = EntitlementRule::trade(
        "kingdom_for_a_horse",
        PartyMatch::ids(&["richard"]),
        PartyMatch::Any,
        TransferSpec::new(Status, "kingship", 1),
        TransferSpec::new(Goods, "horse", 1),
    );
    let pop = Population::new(vec![richard, rider], vec![trade], None).expect("valid fixture");
    scenario(
        "richard_iii",
        "Richard needs a horse and holds a kingdom he has no requirement for. One trade makes both classes sufficient.",
        pop,
        1,
    )
}

/// Silk beyond need, invested with a merchant for a later return.
pub fn protestant(variant: Variant) -> Scenario {
    use ResourceClass::{Goods, Service};
    let profile = StrategyProfile::new(Stance::Creative)
        .responding_to(&[SasState::Abundance])
        .with_override(
            Stance::Creative,
            SasState::Abundance,
            vec![EffectPrimitive::Invest {
                commit_rule: "E_pm".into(),
                delivery_rule: "E_pm_delivery".into(),
                maturity: 5,
            }],
        );
    let protestant = Agent::new("protestant")
        .require(Goods, needs(Goods, &[("porcelain", 1), ("copper", 1)]))
        .hold(item(Goods, "porcelain"), 1)
        .hold(item(Goods, "copper"), 1)
        .hold(item(Goods, "silk"), 1)
        .with_profile(profile);
    let merchant = Agent::new("merchant").hold(item(Service, "promise"), 1);
    let merchant = match variant {
        Variant::SystemAbundance => merchant
            .require(Goods, needs(Goods, &[("silk", 1)]))
            .hold(item(Goods, "silk"), 2),
        Variant::SystemScarcity => merchant.require(Goods, needs(Goods, &[("silk", 4)])),
    };
    let commit = EntitlementRule::trade(
        "E_pm",
        PartyMatch::ids(&["protestant"]),
        PartyMatch::ids(&["merchant"]),
        TransferSpec::new(Goods, "silk", 1),
        TransferSpec::new(Service, "promise", 1),
    );
    let delivery = EntitlementRule::trade(
        "E_pm_delivery",
        PartyMatch::ids(&["protestant"]),
        PartyMatch::ids(&["merchant"]),
        TransferSpec::new(Service, "promise", 1),
        TransferSpec::new(Goods, "silk", 2),
    );
    let pop = Population::new(vec![protestant, merchant], vec![commit, delivery], None)
        .expect("valid fixture");
    let description = match variant {
        Variant::SystemAbundance => {
            "A protestant holds silk beyond need and invests it with a merchant who has silk to spare."
        }
        Variant::SystemScarcity => {
            "A protestant holds silk beyond need and invests it with a merchant who is short of silk."
        }
    };
    scenario(&format!("protestant/{variant}"), description, pop, 6)
}

/// Ten agents and sixteen rations, with access gated by wealth.
pub fn famine(food_coupons: bool) -> Scenario {
    use ResourceClass::{Goods, Money};
    let hungry = || StrategyProfile::new(Stance::Defensive).responding_to(&[SasState::Scarcity]);
    let eater = |id: String, wealth: &str| {
        Agent::new(id)
            .require(Goods, needs(Goods, &[("food", 1)]))
            .attribute("wealth", wealth)
    };
    let mut agents = Vec::new();
    for i in 1..=5 {
        agents.push(eater(format!("r{i:02}"), "high").hold(item(Goods, "food"), 2));
    }
    for i in 1..=2 {
        agents.push(
            eater(format!("m{i:02}"), "middle")
                .hold(item(Money, "cash"), 1)
                .with_profile(hungry()),
        );
    }
    for i in 1..=3 {
        agents.push(eater(format!("p{i:02}"), "low").with_profile(hungry()));
    }
    let reservoir = Agent::new(AgentId::reservoir()).hold(item(Goods, "food"), 6);
    let mut rules = vec![EntitlementRule::trade(
        "food_market",
        PartyMatch::attribute("wealth", &["high", "middle"]),
        PartyMatch::Reservoir,
        TransferSpec::new(Money, "cash", 1),
        TransferSpec::new(Goods, "food", 1),
    )];
    if food_coupons {
        rules.push(EntitlementRule::gift(
            "food_coupons",
            PartyMatch::attribute("wealth", &["low"]),
            PartyMatch::Reservoir,
            TransferSpec::new(Goods, "food", 1),
        ));
    }
    let pop = Population::new(agents, rules, Some(reservoir)).expect("valid fixture");
    let description = if food_coupons {
        "Ten agents need one ration each and sixteen exist. Food is sold for cash, and coupons give the poor a ration."
    } else {
        "Ten agents need one ration each and sixteen exist. Food is sold for cash, which the poor lack."
    };
    scenario(
        if food_coupons {
            "famine/food_coupons"
        } else {
            "famine"
        },
        description,
        pop,
        1,
    )
}
