//! Entitlement rules and the evaluation of exchanges into success (E+) or
//! failure (E-) outcomes.
//!
//! A rule is written from the point of view of its *holder*, the party the
//! entitlement belongs to. The four rule types differ in which way items move:
//!
//! | type       | holder -> counterparty | counterparty -> holder |
//! |------------|------------------------|------------------------|
//! | ownership  | -                      | -                      |
//! | trade      | `surrender`            | `obtain`               |
//! | gift       | -                      | `obtain`               |
//! | extraction | `surrender`            | -                      |
//!
//! Evaluation is pure; [`apply`] commits an outcome to a population.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{classify, SasState};
use crate::population::{Agent, AgentId, Population};
use crate::resource::{Kind, ResourceClass, ResourceItem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntitlementType {
    Ownership,
    Trade,
    Gift,
    Extraction,
}

impl fmt::Display for EntitlementType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntitlementType::Ownership => "ownership",
            EntitlementType::Trade => "trade",
            EntitlementType::Gift => "gift",
            EntitlementType::Extraction => "extraction",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferSpec {
    pub class: ResourceClass,
    pub kind: Kind,
    pub count: u64,
}

impl TransferSpec {
    pub fn new(class: ResourceClass, kind: &str, count: u64) -> Self {
        Self {
            class,
            kind: Kind::new(kind).expect("non-empty kind"),
            count,
        }
    }
}

impl fmt::Display for TransferSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.class, self.kind, self.count)
    }
}

/// What an ownership rule grants title over. `kind = None` covers the whole class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Title {
    pub class: ResourceClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<Kind>,
}

impl Title {
    fn covers(&self, class: ResourceClass, kind: &Kind) -> bool {
        self.class == class && self.kind.as_ref().is_none_or(|k| k == kind)
    }
}

/// Predicate selecting the parties a rule applies to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartyMatch {
    /// Any agent; never the reservoir.
    Any,
    Reservoir,
    Ids(Vec<AgentId>),
    Attribute {
        key: String,
        values: Vec<String>,
    },
}

impl PartyMatch {
    pub fn attribute(key: &str, values: &[&str]) -> Self {
        PartyMatch::Attribute {
            key: key.to_string(),
            values: values.iter().map(|v| v.to_string()).collect(),
        }
    }

    pub fn ids(ids: &[&str]) -> Self {
        PartyMatch::Ids(ids.iter().map(|i| AgentId::new(*i)).collect())
    }

    pub fn matches(&self, party: &Agent) -> bool {
        match self {
            PartyMatch::Any => !party.id.is_reservoir(),
            PartyMatch::Reservoir => party.id.is_reservoir(),
            PartyMatch::Ids(ids) => ids.contains(&party.id),
            PartyMatch::Attribute { key, values } => party
                .attributes
                .get(key)
                .is_some_and(|v| values.iter().any(|x| x == v)),
        }
    }

    /// Agent ids the predicate names explicitly.
    pub fn named_ids(&self) -> &[AgentId] {
        match self {
            PartyMatch::Ids(ids) => ids,
            _ => &[],
        }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntitlementRule {
    pub id: String,
    #[serde(rename = "type")]
    pub etype: EntitlementType,
    pub holder: PartyMatch,
    #[serde(default = "any_party")]
    pub counterparty: PartyMatch,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surrender: Option<TransferSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obtain: Option<TransferSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<Title>,
    #[serde(default = "default_true")]
    pub legitimate: bool,
    /// Maximum uses per tick.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<u32>,
    /// Exercised automatically every tick by each matching holder.
    #[serde(default)]
    pub standing: bool,
}

fn any_party() -> PartyMatch {
    PartyMatch::Any
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("rule `{id}` ({etype}): {reason}")]
    Shape {
        id: String,
        etype: EntitlementType,
        reason: &'static str,
    },
    #[error("rule `{0}`: transfer counts must be positive")]
    ZeroCount(String),
    #[error("rule id must not be empty")]
    EmptyId,
}

impl EntitlementRule {
    fn base(
        id: &str,
        etype: EntitlementType,
        holder: PartyMatch,
        counterparty: PartyMatch,
    ) -> Self {
        Self {
            id: id.to_string(),
            etype,
            holder,
            counterparty,
            surrender: None,
            obtain: None,
            title: None,
            legitimate: true,
            capacity: None,
            standing: false,
        }
    }

    pub fn trade(
        id: &str,
        holder: PartyMatch,
        counterparty: PartyMatch,
        surrender: TransferSpec,
        obtain: TransferSpec,
    ) -> Self {
        Self {
            surrender: Some(surrender),
            obtain: Some(obtain),
            ..Self::base(id, EntitlementType::Trade, holder, counterparty)
        }
    }

    pub fn gift(
        id: &str,
        holder: PartyMatch,
        counterparty: PartyMatch,
        obtain: TransferSpec,
    ) -> Self {
        Self {
            obtain: Some(obtain),
            ..Self::base(id, EntitlementType::Gift, holder, counterparty)
        }
    }

    pub fn extraction(
        id: &str,
        holder: PartyMatch,
        counterparty: PartyMatch,
        surrender: TransferSpec,
    ) -> Self {
        Self {
            surrender: Some(surrender),
            ..Self::base(id, EntitlementType::Extraction, holder, counterparty)
        }
    }

    pub fn ownership(id: &str, holder: PartyMatch, title: Title) -> Self {
        Self {
            title: Some(title),
            ..Self::base(id, EntitlementType::Ownership, holder, PartyMatch::Any)
        }
    }

    pub fn validate(&self) -> Result<(), RuleError> {
        if self.id.trim().is_empty() {
            return Err(RuleError::EmptyId);
        }
        let shape = |reason| {
            Err(RuleError::Shape {
                id: self.id.clone(),
                etype: self.etype,
                reason,
            })
        };
        let (s, o, t) = (
            self.surrender.is_some(),
            self.obtain.is_some(),
            self.title.is_some(),
        );
        match self.etype {
            EntitlementType::Trade if !(s && o) => {
                return shape("a trade needs both `surrender` and `obtain`")
            }
            EntitlementType::Gift if s || !o => return shape("a gift has only `obtain`"),
            EntitlementType::Extraction if !s || o => {
                return shape("an extraction has only `surrender`")
            }
            EntitlementType::Ownership if s || o || !t => {
                return shape("ownership moves nothing and needs a `title`")
            }
            _ => {}
        }
        if t && self.etype != EntitlementType::Ownership {
            return shape("only ownership rules carry a `title`");
        }
        if self
            .surrender
            .iter()
            .chain(self.obtain.iter())
            .any(|x| x.count == 0)
        {
            return Err(RuleError::ZeroCount(self.id.clone()));
        }
        Ok(())
    }

    /// Class the exchange is meant to supply to its beneficiary.
    pub fn requested_class(&self) -> Option<ResourceClass> {
        match self.etype {
            EntitlementType::Trade | EntitlementType::Gift => self.obtain.as_ref().map(|s| s.class),
            EntitlementType::Extraction => self.surrender.as_ref().map(|s| s.class),
            EntitlementType::Ownership => self.title.as_ref().map(|t| t.class),
        }
    }

    pub fn is_exchange(&self) -> bool {
        self.etype != EntitlementType::Ownership
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExchangeStatus {
    #[serde(rename = "E+")]
    Success,
    #[serde(rename = "E-")]
    Failure,
}

impl fmt::Display for ExchangeStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExchangeStatus::Success => "E+",
            ExchangeStatus::Failure => "E-",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    /// The rule worked as written but left the beneficiary short.
    DesignFlaw,
    /// A party withheld what the rule entitles the other to, or lacks title.
    RuleViolation,
    InsufficientHoldings,
    NoApplicableRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    ToHolder,
    ToCounterparty,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transfer {
    pub direction: Direction,
    pub item: ResourceItem,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExchangeOutcome {
    /// `None` only for `NoApplicableRule` failures.
    pub rule_id: Option<String>,
    pub holder: AgentId,
    /// `None` for ownership assertions and when no rule applied.
    pub counterparty: Option<AgentId>,
    pub transfers: Vec<Transfer>,
    pub status: ExchangeStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure_reason: Option<FailureReason>,
    /// Copied from the rule; illegitimate uses are kept for analysis.
    pub legitimate: bool,
    /// True when every specified transfer is present in full.
    pub complete: bool,
}

impl ExchangeOutcome {
    pub fn no_applicable_rule(holder: AgentId) -> Self {
        Self {
            rule_id: None,
            holder,
            counterparty: None,
            transfers: Vec::new(),
            status: ExchangeStatus::Failure,
            failure_reason: Some(FailureReason::NoApplicableRule),
            legitimate: true,
            complete: false,
        }
    }

    pub fn is_success(&self) -> bool {
        self.status == ExchangeStatus::Success
    }

    /// Whether [`apply`] will accept this outcome.
    ///
    /// Successes commit. A design-flaw failure ran in full and commits too.
    /// Partial transfers commit only when the caller allows it.
    pub fn committable(&self, partial_commit: bool) -> bool {
        if self.transfers.is_empty() {
            return false;
        }
        self.complete || partial_commit
    }

    /// The party that received each transfer, and the one that gave it.
    pub fn parties_of(&self, t: &Transfer) -> Option<(&AgentId, &AgentId)> {
        let cp = self.counterparty.as_ref()?;
        Some(match t.direction {
            Direction::ToHolder => (&self.holder, cp),
            Direction::ToCounterparty => (cp, &self.holder),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EntitlementError {
    #[error("`{0}` cannot exchange with itself")]
    SelfExchange(AgentId),
    #[error("rule `{rule}` does not apply to holder `{holder}` and counterparty `{counterparty}`")]
    NonMatchingParties {
        rule: String,
        holder: AgentId,
        counterparty: AgentId,
    },
    #[error("unknown party `{0}`")]
    UnknownParty(AgentId),
    #[error("the population has no reservoir")]
    NoReservoir,
    #[error("rule `{0}` is an ownership rule and moves nothing")]
    NotAnExchange(String),
    #[error("rule `{0}` is not an ownership rule")]
    NotOwnership(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ApplyError {
    #[error("outcome is not committable (status {0}, no transfers or partial without permission)")]
    NotCommittable(ExchangeStatus),
    #[error("holdings changed since evaluation: {0}")]
    StaleOutcome(String),
    #[error("unknown party `{0}`")]
    UnknownParty(AgentId),
}

/// Per-tick state that affects evaluation but is not part of the population.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExchangeContext {
    pub partial_commit: bool,
    /// Uses of each rule so far this tick.
    pub uses: BTreeMap<String, u32>,
    /// Classes a party refuses to release this tick.
    pub hoarded: BTreeSet<(AgentId, ResourceClass)>,
}

impl ExchangeContext {
    pub fn new(partial_commit: bool) -> Self {
        Self {
            partial_commit,
            ..Self::default()
        }
    }
}

/// How much of `(class, kind)` `party` can legitimately release right now.
struct Drawable {
    count: u64,
    blocked: bool,
}

fn drawable(
    pop: &Population,
    ctx: &ExchangeContext,
    party: &Agent,
    spec: &TransferSpec,
) -> Drawable {
    let held: u64 = party
        .holdings
        .iter()
        .filter(|(i, _)| i.class == spec.class && i.kind == spec.kind)
        .map(|(_, n)| *n)
        .sum();
    if ctx.hoarded.contains(&(party.id.clone(), spec.class)) {
        return Drawable {
            count: 0,
            blocked: held > 0,
        };
    }
    // Once any ownership rule titles this kind, only titled parties may release it.
    let titled: Vec<&EntitlementRule> = pop
        .rules
        .iter()
        .filter(|r| {
            r.etype == EntitlementType::Ownership
                && r.title
                    .as_ref()
                    .is_some_and(|t| t.covers(spec.class, &spec.kind))
        })
        .collect();
    if !titled.is_empty() && !titled.iter().any(|r| r.holder.matches(party)) {
        return Drawable {
            count: 0,
            blocked: held > 0,
        };
    }
    Drawable {
        count: held,
        blocked: false,
    }
}

/// Concrete items (in item order) making up `count` units of the spec.
fn pick_items(
    party: &Agent,
    spec: &TransferSpec,
    count: u64,
    direction: Direction,
) -> Vec<Transfer> {
    let mut left = count;
    let mut out = Vec::new();
    for (item, n) in &party.holdings {
        if left == 0 {
            break;
        }
        if item.class == spec.class && item.kind == spec.kind {
            let take = left.min(*n);
            out.push(Transfer {
                direction,
                item: item.clone(),
                count: take,
            });
            left -= take;
        }
    }
    out
}

/// Beneficiary state in `class` after the transfers, if it declares a requirement there.
fn post_state(
    beneficiary: &Agent,
    is_holder: bool,
    class: ResourceClass,
    transfers: &[Transfer],
) -> Option<SasState> {
    let req = beneficiary.requirements.get(&class)?;
    let mut held = beneficiary.holdings_in(class).cardinality();
    for t in transfers.iter().filter(|t| t.item.class == class) {
        let inbound = (t.direction == Direction::ToHolder) == is_holder;
        if inbound {
            held += t.count;
        } else {
            held = held.saturating_sub(t.count);
        }
    }
    Some(classify(req.items.cardinality(), held, Some(&req.effective_band())).expect("valid band"))
}

/// Largest `(surrender, obtain)` pair keeping the rule's exchange rate, rounding
/// the surrendered side up, that both parties can cover.
fn partial_trade(
    surrender: u64,
    obtain: u64,
    holder_can: u64,
    counterparty_can: u64,
) -> (u64, u64) {
    let mut q = obtain.min(counterparty_can);
    while q > 0 {
        let s = (surrender * q).div_ceil(obtain);
        if s <= holder_can {
            return (s, q);
        }
        q -= 1;
    }
    (0, 0)
}

/// Evaluates an exchange under `rule` between `holder` and `counterparty`.
/// Pure: nothing is mutated.
pub fn evaluate(
    rule: &EntitlementRule,
    holder: &AgentId,
    counterparty: &AgentId,
    pop: &Population,
    ctx: &ExchangeContext,
) -> Result<ExchangeOutcome, EntitlementError> {
    if !rule.is_exchange() {
        return Err(EntitlementError::NotAnExchange(rule.id.clone()));
    }
    if holder == counterparty {
        return Err(EntitlementError::SelfExchange(holder.clone()));
    }
    let h = pop
        .party(holder)
        .ok_or_else(|| EntitlementError::UnknownParty(holder.clone()))?;
    let c = pop
        .party(counterparty)
        .ok_or_else(|| EntitlementError::UnknownParty(counterparty.clone()))?;
    if !rule.holder.matches(h) || !rule.counterparty.matches(c) {
        return Err(EntitlementError::NonMatchingParties {
            rule: rule.id.clone(),
            holder: holder.clone(),
            counterparty: counterparty.clone(),
        });
    }

    let mut outcome = ExchangeOutcome {
        rule_id: Some(rule.id.clone()),
        holder: holder.clone(),
        counterparty: Some(counterparty.clone()),
        transfers: Vec::new(),
        status: ExchangeStatus::Failure,
        failure_reason: None,
        legitimate: rule.legitimate,
        complete: false,
    };

    if let Some(cap) = rule.capacity {
        if ctx.uses.get(&rule.id).copied().unwrap_or(0) >= cap {
            outcome.failure_reason = Some(FailureReason::NoApplicableRule);
            return Ok(outcome);
        }
    }

    let out_side = rule
        .surrender
        .as_ref()
        .map(|s| (s, drawable(pop, ctx, h, s)));
    let in_side = rule.obtain.as_ref().map(|s| (s, drawable(pop, ctx, c, s)));
    let full = out_side
        .iter()
        .chain(in_side.iter())
        .all(|(s, d)| d.count >= s.count);

    let (out_n, in_n) = if full {
        (
            out_side.as_ref().map_or(0, |(s, _)| s.count),
            in_side.as_ref().map_or(0, |(s, _)| s.count),
        )
    } else {
        let blocked = out_side
            .iter()
            .chain(in_side.iter())
            .any(|(s, d)| d.blocked && d.count < s.count);
        outcome.failure_reason = Some(if blocked {
            FailureReason::RuleViolation
        } else {
            FailureReason::InsufficientHoldings
        });
        if !ctx.partial_commit {
            return Ok(outcome);
        }
        match (&out_side, &in_side) {
            (Some((s, ds)), Some((o, dof))) => partial_trade(s.count, o.count, ds.count, dof.count),
            (Some((s, ds)), None) => (s.count.min(ds.count), 0),
            (None, Some((o, dof))) => (0, o.count.min(dof.count)),
            (None, None) => (0, 0),
        }
    };

    if let Some((s, _)) = &out_side {
        outcome
            .transfers
            .extend(pick_items(h, s, out_n, Direction::ToCounterparty));
    }
    if let Some((o, _)) = &in_side {
        outcome
            .transfers
            .extend(pick_items(c, o, in_n, Direction::ToHolder));
    }
    if !full {
        return Ok(outcome);
    }
    outcome.complete = true;

    // Success means the beneficiary ends up at or above its requirement.
    let (beneficiary, is_holder) = match rule.etype {
        EntitlementType::Extraction => (c, false),
        _ => (h, true),
    };
    let class = rule
        .requested_class()
        .expect("exchange rules move something");
    match post_state(beneficiary, is_holder, class, &outcome.transfers) {
        Some(SasState::Scarcity) => outcome.failure_reason = Some(FailureReason::DesignFlaw),
        _ => outcome.status = ExchangeStatus::Success,
    }
    Ok(outcome)
}

/// Exchange with the reservoir standing in for the rest of the system.
pub fn evaluate_with_system(
    rule: &EntitlementRule,
    agent: &AgentId,
    pop: &Population,
    ctx: &ExchangeContext,
) -> Result<ExchangeOutcome, EntitlementError> {
    if !pop.has_reservoir() {
        return Err(EntitlementError::NoReservoir);
    }
    evaluate(rule, agent, &AgentId::reservoir(), pop, ctx)
}

/// Records an ownership rule for `holder`. Nothing moves; the outcome
/// succeeds when the holder's own holdings meet its requirement in the titled class.
pub fn assert_ownership(
    rule: &EntitlementRule,
    holder: &AgentId,
    pop: &Population,
) -> Result<ExchangeOutcome, EntitlementError> {
    let title = match (&rule.etype, &rule.title) {
        (EntitlementType::Ownership, Some(t)) => t,
        _ => return Err(EntitlementError::NotOwnership(rule.id.clone())),
    };
    let h = pop
        .party(holder)
        .ok_or_else(|| EntitlementError::UnknownParty(holder.clone()))?;
    if !rule.holder.matches(h) {
        return Err(EntitlementError::NonMatchingParties {
            rule: rule.id.clone(),
            holder: holder.clone(),
            counterparty: holder.clone(),
        });
    }
    let scarce = post_state(h, true, title.class, &[]) == Some(SasState::Scarcity);
    Ok(ExchangeOutcome {
        rule_id: Some(rule.id.clone()),
        holder: holder.clone(),
        counterparty: None,
        transfers: Vec::new(),
        status: if scarce {
            ExchangeStatus::Failure
        } else {
            ExchangeStatus::Success
        },
        failure_reason: scarce.then_some(FailureReason::DesignFlaw),
        legitimate: rule.legitimate,
        complete: true,
    })
}

/// Commits the transfers of an outcome. All-or-nothing: on error the
/// population is untouched.
pub fn apply(
    outcome: &ExchangeOutcome,
    pop: &mut Population,
    partial_commit: bool,
) -> Result<(), ApplyError> {
    if outcome.transfers.is_empty() {
        return Ok(());
    }
    if !outcome.committable(partial_commit) {
        return Err(ApplyError::NotCommittable(outcome.status));
    }
    let cp = outcome
        .counterparty
        .clone()
        .ok_or_else(|| ApplyError::UnknownParty(outcome.holder.clone()))?;

    // Check every outflow first so a stale outcome leaves nothing half-done.
    let mut needed: BTreeMap<(&AgentId, &ResourceItem), u64> = BTreeMap::new();
    for t in &outcome.transfers {
        let giver = match t.direction {
            Direction::ToHolder => &cp,
            Direction::ToCounterparty => &outcome.holder,
        };
        *needed.entry((giver, &t.item)).or_default() += t.count;
    }
    for ((giver, item), n) in &needed {
        let party = pop
            .party(giver)
            .ok_or_else(|| ApplyError::UnknownParty((*giver).clone()))?;
        if party.holdings.multiplicity(item) < *n {
            return Err(ApplyError::StaleOutcome(format!(
                "`{giver}` no longer holds {n} x {item}"
            )));
        }
    }
    if pop.party(&outcome.holder).is_none() {
        return Err(ApplyError::UnknownParty(outcome.holder.clone()));
    }

    for t in &outcome.transfers {
        let (to, from) = match t.direction {
            Direction::ToHolder => (&outcome.holder, &cp),
            Direction::ToCounterparty => (&cp, &outcome.holder),
        };
        pop.party_mut(from)
            .expect("checked above")
            .holdings
            .remove_in_place(&t.item, t.count)
            .expect("checked above");
        pop.party_mut(to)
            .expect("checked above")
            .holdings
            .insert(t.item.clone(), t.count);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiset::Multiset;
    use crate::population::Requirement;

    fn item(class: ResourceClass, kind: &str) -> ResourceItem {
        ResourceItem::new(class, kind).unwrap()
    }

    fn needs(class: ResourceClass, kind: &str, n: u64) -> Requirement {
        Requirement::new([(item(class, kind), n)].into_iter().collect())
    }

    fn richard_pop() -> Population {
        let richard = Agent::new("richard")
            .require(
                ResourceClass::Goods,
                needs(ResourceClass::Goods, "horse", 1),
            )
            .require(ResourceClass::Status, Requirement::none())
            .hold(item(ResourceClass::Status, "kingship"), 1);
        let rider = Agent::new("rider").hold(item(ResourceClass::Goods, "horse"), 1);
        let rule = EntitlementRule::trade(
            "kingdom_for_a_horse",
            PartyMatch::ids(&["richard"]),
            PartyMatch::Any,
            TransferSpec::new(ResourceClass::Status, "kingship", 1),
            TransferSpec::new(ResourceClass::Goods, "horse", 1),
        );
        Population::new(vec![richard, rider], vec![rule], None).unwrap()
    }

    #[test]
    fn rule_shapes() {
        let mut r = richard_pop().rules[0].clone();
        assert!(r.validate().is_ok());
        r.obtain = None;
        assert!(matches!(r.validate(), Err(RuleError::Shape { .. })));
        let g = EntitlementRule::gift(
            "g",
            PartyMatch::Any,
            PartyMatch::Reservoir,
            TransferSpec::new(ResourceClass::Goods, "food", 0),
        );
        assert_eq!(g.validate(), Err(RuleError::ZeroCount("g".into())));
        let mut e = EntitlementRule::extraction(
            "e",
            PartyMatch::Any,
            PartyMatch::Reservoir,
            TransferSpec::new(ResourceClass::Money, "tax", 1),
        );
        assert!(e.validate().is_ok());
        e.obtain = Some(TransferSpec::new(ResourceClass::Money, "tax", 1));
        assert!(e.validate().is_err());
        let o = EntitlementRule::ownership(
            "own",
            PartyMatch::Any,
            Title {
                class: ResourceClass::Goods,
                kind: None,
            },
        );
        assert!(o.validate().is_ok());
    }

    #[test]
    fn kingdom_for_a_horse() {
        let mut pop = richard_pop();
        let rule = pop.rules[0].clone();
        let ctx = ExchangeContext::default();
        let out = evaluate(&rule, &"richard".into(), &"rider".into(), &pop, &ctx).unwrap();
        assert_eq!(out.status, ExchangeStatus::Success);
        assert_eq!(out.transfers.len(), 2);
        // evaluate is pure
        assert_eq!(
            evaluate(&rule, &"richard".into(), &"rider".into(), &pop, &ctx).unwrap(),
            out
        );

        apply(&out, &mut pop, false).unwrap();
        let richard = pop.party(&"richard".into()).unwrap();
        assert_eq!(richard.holdings_in(ResourceClass::Goods).cardinality(), 1);
        assert!(richard.holdings_in(ResourceClass::Status).is_empty());
        let rider = pop.party(&"rider".into()).unwrap();
        assert_eq!(
            rider
                .holdings
                .multiplicity(&item(ResourceClass::Status, "kingship")),
            1
        );

        // the same outcome cannot be committed twice
        assert!(matches!(
            apply(&out, &mut pop, false),
            Err(ApplyError::StaleOutcome(_))
        ));
    }

    #[test]
    fn self_exchange_and_non_matching() {
        let pop = richard_pop();
        let rule = &pop.rules[0];
        let ctx = ExchangeContext::default();
        assert_eq!(
            evaluate(rule, &"richard".into(), &"richard".into(), &pop, &ctx),
            Err(EntitlementError::SelfExchange("richard".into()))
        );
        assert!(matches!(
            evaluate(rule, &"rider".into(), &"richard".into(), &pop, &ctx),
            Err(EntitlementError::NonMatchingParties { .. })
        ));
    }

    fn famine_pop(reservoir_food: u64) -> Population {
        let food = item(ResourceClass::Goods, "food");
        let poor = Agent::new("poor")
            .require(ResourceClass::Goods, needs(ResourceClass::Goods, "food", 1))
            .attribute("wealth", "low");
        let reservoir = Agent::new(AgentId::reservoir()).hold(food, reservoir_food);
        let market = EntitlementRule::trade(
            "food_market",
            PartyMatch::Any,
            PartyMatch::Reservoir,
            TransferSpec::new(ResourceClass::Money, "cash", 1),
            TransferSpec::new(ResourceClass::Goods, "food", 1),
        );
        let coupons = EntitlementRule::gift(
            "food_coupons",
            PartyMatch::attribute("wealth", &["low"]),
            PartyMatch::Reservoir,
            TransferSpec::new(ResourceClass::Goods, "food", 1),
        );
        let tax = EntitlementRule::extraction(
            "tax",
            PartyMatch::Any,
            PartyMatch::Reservoir,
            TransferSpec::new(ResourceClass::Money, "cash", 1),
        );
        Population::new(vec![poor], vec![market, coupons, tax], Some(reservoir)).unwrap()
    }

    #[test]
    fn no_money_no_food() {
        let pop = famine_pop(6);
        let out = evaluate_with_system(
            &pop.rules[0],
            &"poor".into(),
            &pop,
            &ExchangeContext::default(),
        )
        .unwrap();
        assert_eq!(out.status, ExchangeStatus::Failure);
        assert_eq!(
            out.failure_reason,
            Some(FailureReason::InsufficientHoldings)
        );
        assert!(out.transfers.is_empty());
        assert!(!out.committable(true));
    }

    #[test]
    fn food_coupons_feed_the_poor() {
        let mut pop = famine_pop(6);
        let rule = pop.rules[1].clone();
        let out =
            evaluate_with_system(&rule, &"poor".into(), &pop, &ExchangeContext::default()).unwrap();
        assert!(out.is_success());
        assert_eq!(out.transfers[0].direction, Direction::ToHolder);
        apply(&out, &mut pop, false).unwrap();
        assert_eq!(pop.party(&"poor".into()).unwrap().holdings.cardinality(), 1);
        assert_eq!(pop.reservoir().unwrap().holdings.cardinality(), 5);
    }

    #[test]
    fn empty_reservoir_gift_fails() {
        let pop = famine_pop(0);
        let out = evaluate_with_system(
            &pop.rules[1],
            &"poor".into(),
            &pop,
            &ExchangeContext::default(),
        )
        .unwrap();
        assert_eq!(
            out.failure_reason,
            Some(FailureReason::InsufficientHoldings)
        );
    }

    #[test]
    fn extraction_flows_to_the_reservoir() {
        let mut pop = famine_pop(0);
        pop.party_mut(&"poor".into())
            .unwrap()
            .holdings
            .insert(item(ResourceClass::Money, "cash"), 2);
        let before = pop.total_holdings();
        let out = evaluate_with_system(
            &pop.rules[2],
            &"poor".into(),
            &pop,
            &ExchangeContext::default(),
        )
        .unwrap();
        assert!(out.is_success());
        assert_eq!(out.transfers[0].direction, Direction::ToCounterparty);
        apply(&out, &mut pop, false).unwrap();
        assert_eq!(pop.total_holdings(), before);
        assert_eq!(pop.reservoir().unwrap().holdings.cardinality(), 1);
    }

    #[test]
    fn no_reservoir() {
        let pop = richard_pop();
        assert_eq!(
            evaluate_with_system(
                &pop.rules[0],
                &"richard".into(),
                &pop,
                &ExchangeContext::default()
            ),
            Err(EntitlementError::NoReservoir)
        );
    }

    #[test]
    fn capacity_limits_uses() {
        let mut pop = famine_pop(6);
        pop.rules[1].capacity = Some(1);
        let mut ctx = ExchangeContext::default();
        ctx.uses.insert("food_coupons".into(), 1);
        let out = evaluate_with_system(&pop.rules[1], &"poor".into(), &pop, &ctx).unwrap();
        assert_eq!(out.failure_reason, Some(FailureReason::NoApplicableRule));
    }

    #[test]
    fn design_flaw_when_supply_too_small() {
        let mut pop = famine_pop(6);
        pop.party_mut(&"poor".into())
            .unwrap()
            .requirements
            .insert(ResourceClass::Goods, needs(ResourceClass::Goods, "food", 3));
        let out = evaluate_with_system(
            &pop.rules[1],
            &"poor".into(),
            &pop,
            &ExchangeContext::default(),
        )
        .unwrap();
        assert_eq!(out.failure_reason, Some(FailureReason::DesignFlaw));
        assert!(out.complete);
        assert!(out.committable(false));
    }

    #[test]
    fn partial_commit_keeps_the_rate() {
        assert_eq!(partial_trade(2, 4, 10, 3), (2, 3));
        assert_eq!(partial_trade(2, 4, 1, 3), (1, 2));
        assert_eq!(partial_trade(1, 1, 0, 5), (0, 0));

        let mut pop = famine_pop(1);
        pop.rules[1].obtain.as_mut().unwrap().count = 3;
        let rule = pop.rules[1].clone();
        let out = evaluate_with_system(&rule, &"poor".into(), &pop, &ExchangeContext::new(false))
            .unwrap();
        assert!(out.transfers.is_empty());
        let out =
            evaluate_with_system(&rule, &"poor".into(), &pop, &ExchangeContext::new(true)).unwrap();
        assert_eq!(out.status, ExchangeStatus::Failure);
        assert_eq!(out.transfers[0].count, 1);
        assert!(matches!(
            apply(&out, &mut pop, false),
            Err(ApplyError::NotCommittable(_))
        ));
        apply(&out, &mut pop, true).unwrap();
        assert_eq!(pop.party(&"poor".into()).unwrap().holdings.cardinality(), 1);
    }

    #[test]
    fn hoarding_and_title_block_draws() {
        let pop = famine_pop(6);
        let mut ctx = ExchangeContext::default();
        ctx.hoarded
            .insert((AgentId::reservoir(), ResourceClass::Goods));
        let out = evaluate_with_system(&pop.rules[1], &"poor".into(), &pop, &ctx).unwrap();
        assert_eq!(out.failure_reason, Some(FailureReason::RuleViolation));

        let mut pop = famine_pop(6);
        pop.rules.push(EntitlementRule::ownership(
            "farmers_own_food",
            PartyMatch::attribute("role", &["farmer"]),
            Title {
                class: ResourceClass::Goods,
                kind: Some(Kind::new("food").unwrap()),
            },
        ));
        let out = evaluate_with_system(
            &pop.rules[1],
            &"poor".into(),
            &pop,
            &ExchangeContext::default(),
        )
        .unwrap();
        assert_eq!(out.failure_reason, Some(FailureReason::RuleViolation));
    }

    #[test]
    fn ownership_assertion() {
        let mut pop = famine_pop(6);
        let own = EntitlementRule::ownership(
            "own",
            PartyMatch::Any,
            Title {
                class: ResourceClass::Goods,
                kind: None,
            },
        );
        pop.rules.push(own.clone());
        let out = assert_ownership(&own, &"poor".into(), &pop).unwrap();
        assert_eq!(out.failure_reason, Some(FailureReason::DesignFlaw));
        pop.party_mut(&"poor".into())
            .unwrap()
            .holdings
            .insert(item(ResourceClass::Goods, "food"), 1);
        assert!(assert_ownership(&own, &"poor".into(), &pop)
            .unwrap()
            .is_success());
        assert!(matches!(
            evaluate(
                &own,
                &"poor".into(),
                &AgentId::reservoir(),
                &pop,
                &ExchangeContext::default()
            ),
            Err(EntitlementError::NotAnExchange(_))
        ));
    }

    #[test]
    fn zero_transfer_apply_is_identity() {
        let mut pop = richard_pop();
        let before = pop.clone();
        apply(
            &ExchangeOutcome::no_applicable_rule("richard".into()),
            &mut pop,
            false,
        )
        .unwrap();
        assert_eq!(pop, before);
    }

    #[test]
    fn transfers_pick_tagged_items_in_order() {
        let h = Agent::new("h")
            .hold(item(ResourceClass::Goods, "horse").with_tag("black"), 1)
            .hold(item(ResourceClass::Goods, "horse").with_tag("white"), 2);
        let picked = pick_items(
            &h,
            &TransferSpec::new(ResourceClass::Goods, "horse", 2),
            2,
            Direction::ToHolder,
        );
        let total: u64 = picked.iter().map(|t| t.count).sum();
        assert_eq!(total, 2);
        assert!(picked[0].item.quality_tags.contains("black"));
        let _: Multiset<ResourceItem> = picked.iter().map(|t| (t.item.clone(), t.count)).collect();
    }

    #[test]
    fn outcome_json_uses_e_plus_minus() {
        let out = ExchangeOutcome::no_applicable_rule("x".into());
        let json = serde_json::to_string(&out).unwrap();
        assert!(json.contains(r#""status":"E-""#));
        assert!(json.contains("no_applicable_rule"));
    }
}
