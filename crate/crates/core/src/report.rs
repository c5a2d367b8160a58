//! Run reports: per-tick state rows, outcome tallies, audit and event log.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classify::{effective_available, CountMode, CrossState, SasState};
use crate::engine::{AuditEntry, Event, SimConfig, TickResult};
use crate::entitlement::{ExchangeStatus, FailureReason};
use crate::population::{aggregate, AgentId, Population, Snapshot};
use crate::resource::ResourceClass;

pub const REPORT_VERSION: u32 = 1;

/// One agent and class at one tick. Only declared classes get a row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateRow {
    pub tick: u32,
    pub agent: AgentId,
    pub class: ResourceClass,
    pub state: SasState,
    pub cross: CrossState,
    pub extrapolated: bool,
    /// E+ when the agent is not short, E- when it is.
    pub entitlement: ExchangeStatus,
    pub required: u64,
    pub available: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemRow {
    pub tick: u32,
    pub class: ResourceClass,
    pub state: SasState,
    pub required: u64,
    pub available: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub success: u64,
    pub failure: u64,
    pub committed: u64,
    pub by_reason: BTreeMap<FailureReason, u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HoldingRow {
    pub agent: AgentId,
    pub class: ResourceClass,
    pub kind: String,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimReport {
    pub version: u32,
    pub scenario: String,
    pub seed: u64,
    pub mode: CountMode,
    pub ticks_run: u32,
    pub stopped_early: bool,
    pub states: Vec<StateRow>,
    pub system: Vec<SystemRow>,
    pub outcomes: OutcomeCounts,
    pub conservation: Vec<AuditEntry>,
    pub final_holdings: Vec<HoldingRow>,
    pub events: Vec<Event>,
}

/// Derived entitlement status for a state.
pub fn entitlement_of(state: SasState) -> ExchangeStatus {
    if state == SasState::Scarcity {
        ExchangeStatus::Failure
    } else {
        ExchangeStatus::Success
    }
}

/// State and system rows for `snapshot`, which must have been taken from `pop`.
pub fn readings(
    tick: u32,
    pop: &Population,
    snapshot: &Snapshot,
    mode: CountMode,
) -> (Vec<StateRow>, Vec<SystemRow>) {
    let mut rows = Vec::new();
    for reading in &snapshot.agents {
        let agent = pop
            .party(&reading.agent)
            .expect("snapshot matches population");
        for (class, r) in &reading.classes {
            if !r.state.is_defined() {
                continue;
            }
            let req = &agent.requirements[class];
            let required = req.items.cardinality();
            let available = effective_available(
                &agent.holdings_in(*class),
                &req.items,
                &pop.policy,
                &req.context,
                mode,
            );
            rows.push(StateRow {
                tick,
                agent: reading.agent.clone(),
                class: *class,
                state: r.state,
                cross: r.cross,
                extrapolated: r.cross.is_extrapolated(),
                entitlement: entitlement_of(r.state),
                required,
                available,
            });
        }
    }
    rows.sort_by(|a, b| (a.tick, &a.agent, a.class).cmp(&(b.tick, &b.agent, b.class)));

    let view = aggregate(pop);
    let system = ResourceClass::ALL
        .into_iter()
        .filter(|c| snapshot.system[c].is_defined())
        .map(|class| SystemRow {
            tick,
            class,
            state: snapshot.system[&class],
            required: view.requirements_in(class).cardinality(),
            available: view.available_in(class, mode, &pop.policy),
        })
        .collect();
    (rows, system)
}

pub(crate) struct ReportBuilder {
    report: SimReport,
}

impl ReportBuilder {
    pub(crate) fn new(name: &str, config: &SimConfig) -> Self {
        Self {
            report: SimReport {
                version: REPORT_VERSION,
                scenario: name.to_string(),
                seed: config.seed,
                mode: config.mode,
                ticks_run: 0,
                stopped_early: false,
                states: Vec::new(),
                system: Vec::new(),
                outcomes: OutcomeCounts::default(),
                conservation: Vec::new(),
                final_holdings: Vec::new(),
                events: Vec::new(),
            },
        }
    }

    pub(crate) fn record_tick(&mut self, result: &TickResult) {
        let r = &mut self.report;
        r.states.extend(result.states.iter().cloned());
        r.system.extend(result.system.iter().cloned());
        r.conservation.push(result.audit.clone());
        for event in &result.events {
            if let Some(outcome) = event.outcome() {
                match outcome.status {
                    ExchangeStatus::Success => r.outcomes.success += 1,
                    ExchangeStatus::Failure => r.outcomes.failure += 1,
                }
                if let Some(reason) = outcome.failure_reason {
                    *r.outcomes.by_reason.entry(reason).or_insert(0) += 1;
                }
                if matches!(event, Event::OutcomeCommitted { .. }) {
                    r.outcomes.committed += 1;
                }
            }
        }
        r.events.extend(result.events.iter().cloned());
    }

    pub(crate) fn finish(
        mut self,
        ticks_run: u32,
        pop: &Population,
        mode: CountMode,
        stopped_early: bool,
    ) -> SimReport {
        let snapshot = crate::population::snapshot_states(pop, mode);
        let (states, system) = readings(ticks_run, pop, &snapshot, mode);
        let r = &mut self.report;
        r.states.extend(states);
        r.system.extend(system);
        r.ticks_run = ticks_run;
        r.stopped_early = stopped_early;
        for party in pop.parties() {
            for (item, n) in &party.holdings {
                r.final_holdings.push(HoldingRow {
                    agent: party.id.clone(),
                    class: item.class,
                    kind: item.kind.to_string(),
                    count: *n,
                });
            }
        }
        self.report
    }
}

impl SimReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is serializable");
        s.push('\n');
        s
    }

    /// Rows at one tick.
    pub fn states_at(&self, tick: u32) -> impl Iterator<Item = &StateRow> {
        self.states.iter().filter(move |r| r.tick == tick)
    }

    pub fn row(&self, tick: u32, agent: &str, class: ResourceClass) -> Option<&StateRow> {
        self.states
            .iter()
            .find(|r| r.tick == tick && r.agent.as_str() == agent && r.class == class)
    }

    pub fn system_at(&self, tick: u32, class: ResourceClass) -> Option<&SystemRow> {
        self.system
            .iter()
            .find(|r| r.tick == tick && r.class == class)
    }

    pub fn conserved(&self) -> bool {
        self.conservation.iter().all(|a| a.ok)
    }

    pub fn held(&self, agent: &str, class: ResourceClass, kind: &str) -> u64 {
        self.final_holdings
            .iter()
            .filter(|h| h.agent.as_str() == agent && h.class == class && h.kind == kind)
            .map(|h| h.count)
            .sum()
    }

    pub fn states_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "tick",
            "agent",
            "class",
            "state",
            "cross",
            "extrapolated",
            "entitlement",
            "required",
            "available",
        ])
        .expect("in-memory write");
        for r in &self.states {
            w.write_record([
                r.tick.to_string(),
                r.agent.to_string(),
                r.class.to_string(),
                r.state.as_str().to_string(),
                r.cross.as_str().to_string(),
                r.extrapolated.to_string(),
                r.entitlement.to_string(),
                r.required.to_string(),
                r.available.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }

    /// Writes `report.json` and `states.csv` into `dir`, creating it if needed.
    pub fn write_to(&self, dir: &Path) -> io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json())?;
        std::fs::write(dir.join("states.csv"), self.states_csv())?;
        Ok(())
    }
}
