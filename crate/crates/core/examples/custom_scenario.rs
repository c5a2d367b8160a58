//! Writing a scenario by hand, running it and saving the report.
//!
//!     cargo run --example custom_scenario

use sas_sim::scenario::parse_scenario;

const SCENARIO: &str = r#"{
  "schema_version": 1,
  "metadata": { "name": "village", "description": "A baker with bread to spare and two neighbours." },
  "agents": [
    { "id": "baker",
      "requirements": [ { "class": "goods", "items": [ { "kind": "bread" } ] } ],
      "holdings": [ { "class": "goods", "kind": "bread", "count": 4 } ],
      "profile": { "stance": "adaptive" } },
    { "id": "ann",
      "requirements": [ { "class": "goods", "items": [ { "kind": "bread" } ] } ],
      "profile": { "stance": "defensive", "respond_to": ["scarcity"] } },
    { "id": "bo",  "requirements": [ { "class": "goods", "items": [ { "kind": "bread" } ], "band": { "lower": 0, "upper": 2 } } ] }
  ],
  "rules": [
    { "id": "sharing", "type": "gift", "holder": "any", "counterparty": { "ids": ["baker"] },
      "obtain": { "class": "goods", "kind": "bread", "count": 1 } }
  ],
  "config": { "ticks": 3, "seed": 5 }
}"#;

fn main() {
    let scenario = parse_scenario(SCENARIO).unwrap();
    let report = scenario.run().unwrap();
    for row in report.states_at(report.ticks_run) {
        println!(
            "{:<6} {} of {} bread: {}",
            row.agent.as_str(),
            row.available,
            row.required,
            row.state
        );
    }

    let dir = std::env::temp_dir().join("sas-sim-village");
    report.write_to(&dir).unwrap();
    println!("report written to {}", dir.display());
}
