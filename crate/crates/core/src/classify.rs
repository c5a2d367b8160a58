//! Scarcity / abundance / sufficiency classification and the
//! absolute / quasi cross-classification of individual against system.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::multiset::Multiset;
use crate::population::Agent;
use crate::resource::{coverage_count, ResourceClass, ResourceItem, SubstitutionPolicy};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassifyError {
    #[error("invalid sufficiency band: lower bound {lower} exceeds upper bound {upper}")]
    InvalidBand { lower: u64, upper: u64 },
}

/// Range of holdings an actor regards as enough. `upper = None` is unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawBand", into = "RawBand")]
pub struct SufficiencyBand {
    lower: u64,
    upper: Option<u64>,
}

#[derive(Serialize, Deserialize)]
struct RawBand {
    lower: u64,
    #[serde(default)]
    upper: Option<u64>,
}

impl TryFrom<RawBand> for SufficiencyBand {
    type Error = ClassifyError;

    fn try_from(raw: RawBand) -> Result<Self, Self::Error> {
        SufficiencyBand::new(raw.lower, raw.upper)
    }
}

impl From<SufficiencyBand> for RawBand {
    fn from(b: SufficiencyBand) -> Self {
        RawBand {
            lower: b.lower,
            upper: b.upper,
        }
    }
}

impl SufficiencyBand {
    pub fn new(lower: u64, upper: Option<u64>) -> Result<Self, ClassifyError> {
        match upper {
            Some(u) if u < lower => Err(ClassifyError::InvalidBand { lower, upper: u }),
            _ => Ok(Self { lower, upper }),
        }
    }

    /// The degenerate band `[n, n]`: plain equality with the requirement.
    pub fn exact(n: u64) -> Self {
        Self {
            lower: n,
            upper: Some(n),
        }
    }

    pub fn unbounded_from(lower: u64) -> Self {
        Self { lower, upper: None }
    }

    pub fn lower(&self) -> u64 {
        self.lower
    }

    pub fn upper(&self) -> Option<u64> {
        self.upper
    }

    pub fn contains(&self, n: u64) -> bool {
        n >= self.lower && self.upper.is_none_or(|u| n <= u)
    }

    /// Shifts both bounds by `delta`, saturating at zero and keeping `lower <= upper`.
    pub fn shifted(&self, delta: i64) -> Self {
        let shift = |v: u64| {
            if delta < 0 {
                v.saturating_sub(delta.unsigned_abs())
            } else {
                v.saturating_add(delta as u64)
            }
        };
        let lower = shift(self.lower);
        let upper = self.upper.map(|u| shift(u).max(lower));
        Self { lower, upper }
    }
}

impl fmt::Display for SufficiencyBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.upper {
            Some(u) => write!(f, "[{}, {}]", self.lower, u),
            None => write!(f, "[{}, inf)", self.lower),
        }
    }
}

/// Relation between a requirement set and a resource set.
///
/// The derived order puts `Scarcity < Sufficiency < Abundance`; `Undefined`
/// sorts last and is not part of that scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SasState {
    Scarcity,
    Sufficiency,
    Abundance,
    Undefined,
}

impl SasState {
    pub const DEFINED: [SasState; 3] = [
        SasState::Scarcity,
        SasState::Sufficiency,
        SasState::Abundance,
    ];

    pub fn is_defined(self) -> bool {
        self != SasState::Undefined
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SasState::Scarcity => "scarcity",
            SasState::Sufficiency => "sufficiency",
            SasState::Abundance => "abundance",
            SasState::Undefined => "undefined",
        }
    }
}

impl fmt::Display for SasState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Individual state read against the system state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossState {
    AbsoluteScarcity,
    QuasiScarcity,
    AbsoluteAbundance,
    QuasiAbundance,
    AbsoluteSufficiency,
    QuasiSufficiency,
    Undefined,
}

impl CrossState {
    pub fn is_quasi(self) -> bool {
        matches!(
            self,
            CrossState::QuasiScarcity | CrossState::QuasiAbundance | CrossState::QuasiSufficiency
        )
    }

    /// Quasi-sufficiency has no definition of its own; it is read by analogy
    /// with quasi-scarcity and quasi-abundance.
    pub fn is_extrapolated(self) -> bool {
        self == CrossState::QuasiSufficiency
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CrossState::AbsoluteScarcity => "absolute_scarcity",
            CrossState::QuasiScarcity => "quasi_scarcity",
            CrossState::AbsoluteAbundance => "absolute_abundance",
            CrossState::QuasiAbundance => "quasi_abundance",
            CrossState::AbsoluteSufficiency => "absolute_sufficiency",
            CrossState::QuasiSufficiency => "quasi_sufficiency",
            CrossState::Undefined => "undefined",
        }
    }
}

impl fmt::Display for CrossState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How the available side of a relation is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountMode {
    /// Plain cardinalities, `|R|` against `|A|`.
    #[default]
    Raw,
    /// Substitution-aware: available items only count toward the
    /// requirement when they can be matched to it.
    Coverage,
}

impl std::str::FromStr for CountMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "raw" => Ok(CountMode::Raw),
            "coverage" => Ok(CountMode::Coverage),
            other => Err(format!("unknown mode `{other}` (expected raw or coverage)")),
        }
    }
}

impl fmt::Display for CountMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CountMode::Raw => "raw",
            CountMode::Coverage => "coverage",
        })
    }
}

/// Classifies `|R|` against `|A|`.
///
/// Without a band this is the strict trichotomy. With a band the requirement
/// count is ignored and `available` is placed relative to the band.
pub fn classify(
    required: u64,
    available: u64,
    band: Option<&SufficiencyBand>,
) -> Result<SasState, ClassifyError> {
    let Some(band) = band else {
        return Ok(match required.cmp(&available) {
            std::cmp::Ordering::Greater => SasState::Scarcity,
            std::cmp::Ordering::Less => SasState::Abundance,
            std::cmp::Ordering::Equal => SasState::Sufficiency,
        });
    };
    // Bands built through serde or `new` are valid; re-check anything else.
    SufficiencyBand::new(band.lower, band.upper)?;
    Ok(if available < band.lower {
        SasState::Scarcity
    } else if band.upper.is_some_and(|u| available > u) {
        SasState::Abundance
    } else {
        SasState::Sufficiency
    })
}

pub fn cross_classify(individual: SasState, system: SasState) -> CrossState {
    use SasState::*;
    match (individual, system) {
        (Undefined, _) | (_, Undefined) => CrossState::Undefined,
        (Scarcity, Scarcity) => CrossState::AbsoluteScarcity,
        (Scarcity, _) => CrossState::QuasiScarcity,
        (Abundance, Abundance) => CrossState::AbsoluteAbundance,
        (Abundance, _) => CrossState::QuasiAbundance,
        (Sufficiency, Sufficiency) => CrossState::AbsoluteSufficiency,
        (Sufficiency, _) => CrossState::QuasiSufficiency,
    }
}

/// The count compared against the requirement in the given mode.
///
/// In coverage mode, when some required item is left uncovered only the
/// covered count is available; otherwise surplus items are added on top.
pub fn effective_available(
    available: &Multiset<ResourceItem>,
    required: &Multiset<ResourceItem>,
    policy: &SubstitutionPolicy,
    context: &str,
    mode: CountMode,
) -> u64 {
    match mode {
        CountMode::Raw => available.cardinality(),
        CountMode::Coverage => {
            // Inputs are pre-filtered to one class by the callers.
            let cov = coverage_count(available, required, policy, context)
                .expect("callers pass single-class multisets");
            if cov.covered < required.cardinality() {
                cov.covered
            } else {
                cov.covered + cov.surplus
            }
        }
    }
}

/// Per-class state of one agent. Classes without a declared requirement are `Undefined`.
pub fn classify_agent(
    agent: &Agent,
    policy: &SubstitutionPolicy,
    mode: CountMode,
) -> BTreeMap<ResourceClass, SasState> {
    ResourceClass::ALL
        .into_iter()
        .map(|class| (class, classify_agent_class(agent, class, policy, mode)))
        .collect()
}

pub fn classify_agent_class(
    agent: &Agent,
    class: ResourceClass,
    policy: &SubstitutionPolicy,
    mode: CountMode,
) -> SasState {
    let Some(req) = agent.requirements.get(&class) else {
        return SasState::Undefined;
    };
    let held = agent.holdings_in(class);
    let avail = effective_available(&held, &req.items, policy, &req.context, mode);
    let band = req
        .band
        .unwrap_or_else(|| SufficiencyBand::exact(req.items.cardinality()));
    classify(req.items.cardinality(), avail, Some(&band)).expect("stored bands are valid")
}
