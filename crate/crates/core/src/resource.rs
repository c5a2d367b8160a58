//! Resource classes, resource items and substitutability within a class.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::multiset::Multiset;

/// The six classes of social resources.
///
/// Declaration order is the canonical reporting order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResourceClass {
    Love,
    Status,
    Information,
    Money,
    Goods,
    Service,
}

impl ResourceClass {
    pub const ALL: [ResourceClass; 6] = [
        ResourceClass::Love,
        ResourceClass::Status,
        ResourceClass::Information,
        ResourceClass::Money,
        ResourceClass::Goods,
        ResourceClass::Service,
    ];

    /// How much the value of the resource depends on who provides it.
    /// Love is the most particular, money the least.
    pub fn particularity(self) -> u8 {
        match self {
            ResourceClass::Love => 4,
            ResourceClass::Status | ResourceClass::Service => 3,
            ResourceClass::Information | ResourceClass::Goods => 2,
            ResourceClass::Money => 1,
        }
    }

    /// How tangible the resource is. Goods and services are the most
    /// concrete, status and information the most symbolic.
    pub fn concreteness(self) -> u8 {
        match self {
            ResourceClass::Goods | ResourceClass::Service => 3,
            ResourceClass::Love | ResourceClass::Money => 2,
            ResourceClass::Status | ResourceClass::Information => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ResourceClass::Love => "love",
            ResourceClass::Status => "status",
            ResourceClass::Information => "information",
            ResourceClass::Money => "money",
            ResourceClass::Goods => "goods",
            ResourceClass::Service => "service",
        }
    }
}

impl fmt::Display for ResourceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown resource class `{0}`")]
pub struct UnknownClass(pub String);

impl FromStr for ResourceClass {
    type Err = UnknownClass;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ResourceClass::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownClass(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResourceError {
    #[error("resource kind must not be empty")]
    EmptyKind,
    #[error("coverage inputs span several classes ({0} and {1})")]
    MixedClasses(ResourceClass, ResourceClass),
}

/// Identifier of a resource kind such as `horse` or `food`. Never empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Kind(String);

impl Kind {
    pub fn new(kind: impl Into<String>) -> Result<Self, ResourceError> {
        let kind = kind.into();
        if kind.trim().is_empty() {
            return Err(ResourceError::EmptyKind);
        }
        Ok(Kind(kind))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Kind {
    type Error = ResourceError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Kind::new(value)
    }
}

impl FromStr for Kind {
    type Err = ResourceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Kind::new(s)
    }
}

impl From<Kind> for String {
    fn from(k: Kind) -> Self {
        k.0
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// An element of a requirement or resource set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ResourceItem {
    pub class: ResourceClass,
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub quality_tags: BTreeSet<String>,
}

impl ResourceItem {
    pub fn new(class: ResourceClass, kind: &str) -> Result<Self, ResourceError> {
        Ok(Self {
            class,
            kind: Kind::new(kind)?,
            quality_tags: BTreeSet::new(),
        })
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.quality_tags.insert(tag.into());
        self
    }
}

impl fmt::Display for ResourceItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for tag in &self.quality_tags {
            write!(f, "{tag} ")?;
        }
        write!(f, "{}", self.kind)
    }
}

/// Context tag used when no substitution context is given.
pub const DEFAULT_CONTEXT: &str = "default";

/// `to` may stand in for a required `from` within `class`, in `context`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubstitutionRule {
    pub class: ResourceClass,
    pub from: Kind,
    pub to: Kind,
    #[serde(default = "default_context")]
    pub context: String,
}

fn default_context() -> String {
    DEFAULT_CONTEXT.to_string()
}

/// Directional, context-tagged substitutability. Every kind implicitly
/// substitutes for itself.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SubstitutionPolicy {
    pub rules: Vec<SubstitutionRule>,
}

impl SubstitutionPolicy {
    pub fn new(rules: Vec<SubstitutionRule>) -> Self {
        Self { rules }
    }

    pub fn allows(&self, class: ResourceClass, from: &Kind, to: &Kind, context: &str) -> bool {
        self.rules
            .iter()
            .any(|r| r.class == class && &r.from == from && &r.to == to && r.context == context)
    }
}

/// Whether `item` can satisfy a requirement for `required` in `context`.
pub fn satisfies(
    item: &ResourceItem,
    required: &ResourceItem,
    policy: &SubstitutionPolicy,
    context: &str,
) -> bool {
    item.class == required.class
        && (item.kind == required.kind
            || policy.allows(required.class, &required.kind, &item.kind, context))
}

/// Result of matching available items against required items.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Coverage {
    /// Required occurrences that some available occurrence can satisfy.
    pub covered: u64,
    /// Available occurrences left unmatched.
    pub surplus: u64,
}

fn single_class<'a>(
    items: impl Iterator<Item = &'a ResourceItem>,
) -> Result<Option<ResourceClass>, ResourceError> {
    let mut class = None;
    for item in items {
        match class {
            None => class = Some(item.class),
            Some(c) if c != item.class => return Err(ResourceError::MixedClasses(c, item.class)),
            Some(_) => {}
        }
    }
    Ok(class)
}

/// Size of a maximum matching between required and available occurrences,
/// where an edge exists when the available item satisfies the required one.
///
/// Solved as max-flow over distinct items (multiplicities become capacities),
/// so the cost does not grow with the counts themselves.
pub fn coverage_count(
    available: &Multiset<ResourceItem>,
    required: &Multiset<ResourceItem>,
    policy: &SubstitutionPolicy,
    context: &str,
) -> Result<Coverage, ResourceError> {
    single_class(available.elements().chain(required.elements()))?;

    let req: Vec<(&ResourceItem, u64)> = required.iter().map(|(e, n)| (e, *n)).collect();
    let avail: Vec<(&ResourceItem, u64)> = available.iter().map(|(e, n)| (e, *n)).collect();

    // Node layout: 0 = source, 1..=r required, r+1..=r+a available, r+a+1 = sink.
    let r = req.len();
    let a = avail.len();
    let sink = r + a + 1;
    let mut net = FlowNetwork::new(sink + 1);
    for (i, (_, n)) in req.iter().enumerate() {
        net.add_edge(0, 1 + i, *n);
    }
    for (j, (_, n)) in avail.iter().enumerate() {
        net.add_edge(1 + r + j, sink, *n);
    }
    for (i, (ri, rn)) in req.iter().enumerate() {
        for (j, (aj, an)) in avail.iter().enumerate() {
            if satisfies(aj, ri, policy, context) {
                net.add_edge(1 + i, 1 + r + j, (*rn).min(*an));
            }
        }
    }
    let covered = net.max_flow(0, sink);
    Ok(Coverage {
        covered,
        surplus: available.cardinality() - covered,
    })
}

struct FlowEdge {
    to: usize,
    cap: u64,
}

/// Edmonds-Karp on a small residual graph.
struct FlowNetwork {
    edges: Vec<FlowEdge>,
    adj: Vec<Vec<usize>>,
}

impl FlowNetwork {
    fn new(nodes: usize) -> Self {
        Self {
            edges: Vec::new(),
            adj: vec![Vec::new(); nodes],
        }
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: u64) {
        self.adj[from].push(self.edges.len());
        self.edges.push(FlowEdge { to, cap });
        self.adj[to].push(self.edges.len());
        self.edges.push(FlowEdge { to: from, cap: 0 });
    }

    fn max_flow(&mut self, source: usize, sink: usize) -> u64 {
        let mut total = 0;
        loop {
            let mut via: Vec<Option<usize>> = vec![None; self.adj.len()];
            let mut queue = std::collections::VecDeque::from([source]);
            let mut seen = vec![false; self.adj.len()];
            seen[source] = true;
            while let Some(u) = queue.pop_front() {
                if u == sink {
                    break;
                }
                for &e in &self.adj[u] {
                    let v = self.edges[e].to;
                    if !seen[v] && self.edges[e].cap > 0 {
                        seen[v] = true;
                        via[v] = Some(e);
                        queue.push_back(v);
                    }
                }
            }
            if !seen[sink] {
                return total;
            }
            let mut bottleneck = u64::MAX;
            let mut v = sink;
            while let Some(e) = via[v] {
                bottleneck = bottleneck.min(self.edges[e].cap);
                v = self.edges[e ^ 1].to;
            }
            let mut v = sink;
            while let Some(e) = via[v] {
                self.edges[e].cap -= bottleneck;
                self.edges[e ^ 1].cap += bottleneck;
                v = self.edges[e ^ 1].to;
            }
            total += bottleneck;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn goods(kind: &str) -> ResourceItem {
        ResourceItem::new(ResourceClass::Goods, kind).unwrap()
    }

    fn transport_policy() -> SubstitutionPolicy {
        SubstitutionPolicy::new(vec![SubstitutionRule {
            class: ResourceClass::Goods,
            from: Kind::new("horse").unwrap(),
            to: Kind::new("donkey").unwrap(),
            context: "transport".into(),
        }])
    }

    #[test]
    fn class_coordinates() {
        let max_part = ResourceClass::ALL
            .iter()
            .map(|c| c.particularity())
            .max()
            .unwrap();
        let min_part = ResourceClass::ALL
            .iter()
            .map(|c| c.particularity())
            .min()
            .unwrap();
        assert_eq!(ResourceClass::Love.particularity(), max_part);
        assert_eq!(ResourceClass::Money.particularity(), min_part);
        let max_conc = ResourceClass::ALL
            .iter()
            .map(|c| c.concreteness())
            .max()
            .unwrap();
        let min_conc = ResourceClass::ALL
            .iter()
            .map(|c| c.concreteness())
            .min()
            .unwrap();
        assert_eq!(ResourceClass::Goods.concreteness(), max_conc);
        assert_eq!(ResourceClass::Service.concreteness(), max_conc);
        assert_eq!(ResourceClass::Status.concreteness(), min_conc);
        assert_eq!(ResourceClass::Information.concreteness(), min_conc);
        assert!(ResourceClass::Money.concreteness() > min_conc);
        assert!(ResourceClass::Money.concreteness() < max_conc);
        assert_eq!(
            ResourceClass::Love.concreteness(),
            ResourceClass::Money.concreteness()
        );
    }

    #[test]
    fn class_round_trips_through_str() {
        for c in ResourceClass::ALL {
            assert_eq!(c.as_str().parse::<ResourceClass>().unwrap(), c);
        }
        assert!("food".parse::<ResourceClass>().is_err());
    }

    #[test]
    fn empty_kind_rejected() {
        assert_eq!(Kind::new("  "), Err(ResourceError::EmptyKind));
        assert!(serde_json::from_str::<ResourceItem>(r#"{"class":"goods","kind":""}"#).is_err());
    }

    #[test]
    fn black_horse_is_a_horse() {
        let black = goods("horse").with_tag("black");
        let white = goods("horse").with_tag("white");
        assert!(satisfies(&black, &white, &transport_policy(), "transport"));
        assert!(satisfies(
            &black,
            &goods("horse"),
            &transport_policy(),
            "transport"
        ));
    }

    #[test]
    fn reflexive_with_empty_policy() {
        let p = SubstitutionPolicy::default();
        assert!(satisfies(&goods("horse"), &goods("horse"), &p, "anything"));
    }

    #[test]
    fn substitution_is_context_bound() {
        let p = transport_policy();
        assert!(satisfies(
            &goods("donkey"),
            &goods("horse"),
            &p,
            "transport"
        ));
        assert!(!satisfies(
            &goods("donkey"),
            &goods("horse"),
            &p,
            "wedding-gift"
        ));
        // directional
        assert!(!satisfies(
            &goods("horse"),
            &goods("donkey"),
            &p,
            "transport"
        ));
    }

    #[test]
    fn never_crosses_classes() {
        let item = ResourceItem::new(ResourceClass::Money, "horse").unwrap();
        assert!(!satisfies(
            &item,
            &goods("horse"),
            &SubstitutionPolicy::default(),
            DEFAULT_CONTEXT
        ));
    }

    #[test]
    fn coverage_examples() {
        let p = SubstitutionPolicy::default();
        let horse: Multiset<_> = [goods("horse")].into_iter().collect();
        assert_eq!(
            coverage_count(&horse, &horse, &p, DEFAULT_CONTEXT).unwrap(),
            Coverage {
                covered: 1,
                surplus: 0
            }
        );
        assert_eq!(
            coverage_count(&Multiset::new(), &horse, &p, DEFAULT_CONTEXT).unwrap(),
            Coverage {
                covered: 0,
                surplus: 0
            }
        );
        let mut p = transport_policy();
        p.rules.push(SubstitutionRule {
            class: ResourceClass::Goods,
            from: Kind::new("horse").unwrap(),
            to: Kind::new("camel").unwrap(),
            context: "transport".into(),
        });
        let avail: Multiset<_> = [goods("donkey"), goods("camel")].into_iter().collect();
        assert_eq!(
            coverage_count(&avail, &horse, &p, "transport").unwrap(),
            Coverage {
                covered: 1,
                surplus: 1
            }
        );
    }

    #[test]
    fn coverage_rejects_mixed_classes() {
        let avail: Multiset<_> = [
            goods("horse"),
            ResourceItem::new(ResourceClass::Money, "coin").unwrap(),
        ]
        .into_iter()
        .collect();
        let err = coverage_count(
            &avail,
            &Multiset::new(),
            &SubstitutionPolicy::default(),
            "x",
        );
        assert!(matches!(err, Err(ResourceError::MixedClasses(..))));
    }

    /// Brute force: try every assignment of available occurrences to required
    /// occurrences (or to nothing) and keep the largest valid matching.
    fn brute_force_cover(
        avail: &[ResourceItem],
        req: &[ResourceItem],
        policy: &SubstitutionPolicy,
        ctx: &str,
    ) -> u64 {
        fn go(
            i: usize,
            avail: &[ResourceItem],
            req: &[ResourceItem],
            used: &mut Vec<bool>,
            policy: &SubstitutionPolicy,
            ctx: &str,
        ) -> u64 {
            if i == req.len() {
                return 0;
            }
            let mut best = go(i + 1, avail, req, used, policy, ctx);
            for j in 0..avail.len() {
                if !used[j] && satisfies(&avail[j], &req[i], policy, ctx) {
                    used[j] = true;
                    best = best.max(1 + go(i + 1, avail, req, used, policy, ctx));
                    used[j] = false;
                }
            }
            best
        }
        go(0, avail, req, &mut vec![false; avail.len()], policy, ctx)
    }

    const KINDS: [&str; 4] = ["horse", "donkey", "camel", "cart"];

    fn arb_items(max: usize) -> impl Strategy<Value = Vec<ResourceItem>> {
        proptest::collection::vec(0usize..4, 0..max)
            .prop_map(|v| v.into_iter().map(|k| goods(KINDS[k])).collect())
    }

    fn arb_policy() -> impl Strategy<Value = SubstitutionPolicy> {
        proptest::collection::vec((0usize..4, 0usize..4, 0usize..2), 0..6).prop_map(|v| {
            SubstitutionPolicy::new(
                v.into_iter()
                    .map(|(f, t, c)| SubstitutionRule {
                        class: ResourceClass::Goods,
                        from: Kind::new(KINDS[f]).unwrap(),
                        to: Kind::new(KINDS[t]).unwrap(),
                        context: ["transport", "wedding"][c].into(),
                    })
                    .collect(),
            )
        })
    }

    proptest! {
        #[test]
        fn flow_matches_brute_force(avail in arb_items(6), req in arb_items(6), policy in arb_policy()) {
            let a: Multiset<_> = avail.iter().cloned().collect();
            let r: Multiset<_> = req.iter().cloned().collect();
            let cov = coverage_count(&a, &r, &policy, "transport").unwrap();
            prop_assert_eq!(cov.covered, brute_force_cover(&avail, &req, &policy, "transport"));
            prop_assert_eq!(cov.covered + cov.surplus, a.cardinality());
            prop_assert!(cov.covered <= a.cardinality().min(r.cardinality()));
        }

        #[test]
        fn empty_policy_is_per_kind_min(avail in arb_items(8), req in arb_items(8)) {
            let a: Multiset<_> = avail.into_iter().collect();
            let r: Multiset<_> = req.into_iter().collect();
            let cov = coverage_count(&a, &r, &SubstitutionPolicy::default(), DEFAULT_CONTEXT).unwrap();
            let expected: u64 = r.iter().map(|(k, n)| (*n).min(a.multiplicity(k))).sum();
            prop_assert_eq!(cov.covered, expected);
        }

        #[test]
        fn covered_is_monotone_in_available(
            avail in arb_items(5), extra in arb_items(4), req in arb_items(5), policy in arb_policy()
        ) {
            let a: Multiset<_> = avail.into_iter().collect();
            let more = a.bag_sum(&extra.into_iter().collect());
            let r: Multiset<_> = req.into_iter().collect();
            let before = coverage_count(&a, &r, &policy, "transport").unwrap().covered;
            let after = coverage_count(&more, &r, &policy, "transport").unwrap().covered;
            prop_assert!(after >= before);
        }
    }
}
