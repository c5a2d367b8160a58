//! Within-class substitution and coverage counting.
//!
//! A required item can be met by an identical item, or by one the policy
//! allows in its place. Coverage is the largest number of required items
//! that can be met at once.
//!
//!     cargo run --example substitution

use sas_sim::classify::{classify, effective_available, CountMode};
use sas_sim::multiset::Multiset;
use sas_sim::resource::{
    coverage_count, ResourceClass, ResourceItem, SubstitutionPolicy, SubstitutionRule,
};

fn goods(kind: &str) -> ResourceItem {
    ResourceItem::new(ResourceClass::Goods, kind).unwrap()
}

fn main() {
    let required: Multiset<ResourceItem> = [(goods("bread"), 2), (goods("rice"), 1)]
        .into_iter()
        .collect();
    let held: Multiset<ResourceItem> = [(goods("bread"), 1), (goods("potato"), 3)]
        .into_iter()
        .collect();

    let strict = SubstitutionPolicy::default();
    let lenient = SubstitutionPolicy::new(vec![SubstitutionRule {
        class: ResourceClass::Goods,
        from: "bread".parse().unwrap(),
        to: "potato".parse().unwrap(),
        context: "default".into(),
    }]);

    for (name, policy) in [("no substitution", &strict), ("potato for bread", &lenient)] {
        let cov = coverage_count(&held, &required, policy, "default").unwrap();
        let avail = effective_available(&held, &required, policy, "default", CountMode::Coverage);
        let state = classify(required.cardinality(), avail, None).unwrap();
        println!(
            "{name:<18} covered {} of {}, surplus {}, counted {avail} -> {state}",
            cov.covered,
            required.cardinality(),
            cov.surplus
        );
    }
    let raw = classify(required.cardinality(), held.cardinality(), None).unwrap();
    println!(
        "{:<18} |R| = {}, |A| = {} -> {raw}",
        "raw cardinality",
        required.cardinality(),
        held.cardinality()
    );
}
