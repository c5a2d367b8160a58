//! Individual and system classification, bands and cross-states.
//!
//!     cargo run --example classification

use sas_sim::classify::{classify, cross_classify, SasState, SufficiencyBand};

fn main() {
    println!("plain trichotomy, |R| = 3:");
    for available in 1..=5 {
        println!(
            "  |A| = {available}: {}",
            classify(3, available, None).unwrap()
        );
    }

    // An optimal range instead of a single point.
    let band = SufficiencyBand::new(2, Some(4)).unwrap();
    println!("with band {band}:");
    for available in 1..=5 {
        println!(
            "  |A| = {available}: {}",
            classify(3, available, Some(&band)).unwrap()
        );
    }
    let open = SufficiencyBand::unbounded_from(2);
    println!(
        "with band {open}, |A| = 100: {}",
        classify(3, 100, Some(&open)).unwrap()
    );

    println!("individual x system:");
    for ind in SasState::DEFINED {
        for sys in SasState::DEFINED {
            let cross = cross_classify(ind, sys);
            let note = if cross.is_extrapolated() {
                "  (by analogy)"
            } else {
                ""
            };
            println!("  {ind:<12} in a system of {sys:<12} -> {cross}{note}");
        }
    }
}
