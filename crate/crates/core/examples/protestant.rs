//! A creative response to abundance: investing surplus for a later return.
//!
//!     cargo run --example protestant
//!     cargo run --example protestant -- system-scarcity

use sas_sim::engine::{Event, Source};
use sas_sim::fixtures::{self, Variant};
use sas_sim::resource::ResourceClass;

fn main() {
    let variant: Variant = std::env::args()
        .nth(1)
        .map(|v| v.parse().unwrap_or_else(|e| panic!("{e}")))
        .unwrap_or_default();
    let s = fixtures::protestant(variant);
    let report = s.run().unwrap();

    println!("{}", s.metadata.description);
    for tick in 0..=report.ticks_run {
        let row = report
            .row(tick, "protestant", ResourceClass::Goods)
            .unwrap();
        println!(
            "tick {tick}: goods {}/{} {:<12} {}",
            row.available,
            row.required,
            row.state.as_str(),
            row.cross
        );
    }
    for e in &report.events {
        match e {
            Event::StrategySelected {
                tick, agent, label, ..
            } => println!("t{tick} {agent} chooses {label}"),
            Event::PromiseScheduled {
                tick,
                due_tick,
                rule_id,
                ..
            } => {
                println!("t{tick} promise {rule_id} due at t{due_tick}")
            }
            Event::OutcomeCommitted {
                tick,
                source: Source::Delivery { .. },
                outcome,
            } => {
                println!("t{tick} delivery {}", outcome.status)
            }
            Event::OutcomeFailed {
                tick,
                source: Source::Delivery { .. },
                outcome,
            } => {
                println!(
                    "t{tick} delivery {} ({:?})",
                    outcome.status,
                    outcome.failure_reason.unwrap()
                )
            }
            _ => {}
        }
    }
}
