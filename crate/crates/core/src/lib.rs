//! Scarcity, abundance and sufficiency in social resource exchange.
//!
//! Agents hold multisets of resources drawn from six classes and declare
//! what they require. Comparing the two classifies each agent, per class, as
//! in scarcity, sufficiency or abundance; the same comparison over the
//! whole population gives the system state. Entitlement rules move resources
//! between agents, and strategy profiles decide how agents react to their
//! state. [`engine::run`] ties it together in a deterministic tick loop.
//!
//! ```
//! use sas_sim::classify::{classify, SasState};
//!
//! assert_eq!(classify(2, 1, None).unwrap(), SasState::Scarcity);
//! assert_eq!(classify(2, 2, None).unwrap(), SasState::Sufficiency);
//! assert_eq!(classify(2, 3, None).unwrap(), SasState::Abundance);
//! ```

pub mod classify;
pub mod cli;
pub mod engine;
pub mod entitlement;
pub mod fixtures;
pub mod multiset;
pub mod population;
pub mod report;
pub mod resource;
pub mod scenario;
pub mod strategy;

pub use classify::{classify, CountMode, CrossState, SasState, SufficiencyBand};
pub use engine::{run, SimConfig, Simulation};
pub use entitlement::{EntitlementRule, ExchangeOutcome, ExchangeStatus, FailureReason};
pub use multiset::Multiset;
pub use population::{Agent, AgentId, Population, Requirement};
pub use report::SimReport;
pub use resource::{ResourceClass, ResourceItem};
pub use scenario::Scenario;
pub use strategy::{Stance, StrategyProfile};
