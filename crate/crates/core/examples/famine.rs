//! Hunger amid plenty, and what changes when entitlements change.
//!
//!     cargo run --example famine

use sas_sim::fixtures;
use sas_sim::resource::ResourceClass::Goods;
use sas_sim::SimReport;

fn summary(report: &SimReport) {
    let end = report.ticks_run;
    let sys = report.system_at(end, Goods).unwrap();
    println!(
        "  system: {} rations for {} required -> {}",
        sys.available, sys.required, sys.state
    );
    for row in report.states_at(end) {
        println!(
            "  {:<4} food {} {:<12} {:<20} {}",
            row.agent.as_str(),
            report.held(row.agent.as_str(), Goods, "food"),
            row.state.as_str(),
            row.cross.as_str(),
            row.entitlement
        );
    }
}

fn main() {
    for coupons in [false, true] {
        let s = fixtures::famine(coupons);
        println!("{}", s.metadata.description);
        let report = s.run().unwrap();
        summary(&report);
        println!();
    }
}
