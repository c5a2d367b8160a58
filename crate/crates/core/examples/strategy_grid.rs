//! The twelve coping strategies and how a profile picks one.
//!
//!     cargo run --example strategy_grid

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sas_sim::classify::SasState;
use sas_sim::resource::ResourceClass;
use sas_sim::strategy::{catalog, select, Stance, StrategyProfile};

fn main() {
    for cell in catalog() {
        println!(
            "{:>2}  {:<10} {:<12} {}",
            cell.number,
            cell.stance.to_string(),
            cell.state.as_str(),
            cell.label
        );
    }

    let states: BTreeMap<_, _> = [
        (ResourceClass::Money, SasState::Abundance),
        (ResourceClass::Love, SasState::Scarcity),
        (ResourceClass::Goods, SasState::Sufficiency),
    ]
    .into_iter()
    .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    let steady = StrategyProfile::new(Stance::Adaptive);
    let sel = select(&states, &steady, &mut rng).unwrap();
    println!(
        "\nadaptive agent copes with {} via cell {} ({})",
        sel.class, sel.cell.number, sel.cell.label
    );

    let fickle = StrategyProfile::new(Stance::Defensive)
        .with_weights(&[(Stance::Defensive, 1), (Stance::Creative, 1)]);
    let picks: Vec<String> = (0..6)
        .map(|_| {
            select(&states, &fickle, &mut rng)
                .unwrap()
                .cell
                .stance
                .to_string()
                .to_string()
        })
        .collect();
    println!("weighted agent over six ticks: {}", picks.join(", "));
}
