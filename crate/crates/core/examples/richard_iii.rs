//! A single trade that turns scarcity and abundance into sufficiency.
//!
//!     cargo run --example richard_iii

use sas_sim::classify::CountMode;
use sas_sim::entitlement::{self, ExchangeContext};
use sas_sim::fixtures;
use sas_sim::population::{snapshot_states, AgentId};

fn show(label: &str, pop: &sas_sim::Population) {
    let snap = snapshot_states(pop, CountMode::Raw);
    let richard = snap.agent(&AgentId::new("richard")).unwrap();
    let parts: Vec<String> = richard
        .classes
        .iter()
        .filter(|(_, r)| r.state.is_defined())
        .map(|(c, r)| format!("{c}={}", r.state))
        .collect();
    println!("{label:<7} {}", parts.join(", "));
}

fn main() {
    let mut pop = fixtures::richard_iii().population;
    show("before", &pop);

    let rule = pop.rule("kingdom_for_a_horse").unwrap().clone();
    let outcome = entitlement::evaluate(
        &rule,
        &"richard".into(),
        &"rider".into(),
        &pop,
        &ExchangeContext::default(),
    )
    .unwrap();
    println!("{} -> {}", rule.id, outcome.status);
    for t in &outcome.transfers {
        let (to, from) = outcome.parties_of(t).unwrap();
        println!("  {from} gives {to} {} x {}", t.count, t.item);
    }
    entitlement::apply(&outcome, &mut pop, false).unwrap();
    show("after", &pop);
}
