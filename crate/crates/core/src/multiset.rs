//! Multisets (bags) over ordered elements.
//!
//! Both requirement sets and resource sets are bags: the same element may
//! occur several times, and cardinality counts every occurrence. Entries are
//! kept in a `BTreeMap` so iteration order, and therefore everything built on
//! top of it, is deterministic.

use std::collections::btree_map;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MultisetError {
    #[error("cannot remove {requested} occurrence(s) of {element}: only {held} held")]
    InsufficientMultiplicity {
        element: String,
        requested: u64,
        held: u64,
    },
}

/// A bag of `T` with non-negative integer multiplicities.
///
/// Absent elements have multiplicity zero; a zero entry is never stored.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Multiset<T: Ord> {
    entries: BTreeMap<T, u64>,
}

impl<T: Ord> Default for Multiset<T> {
    fn default() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }
}

impl<T: Ord> Multiset<T> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sum of all multiplicities, `|s|`.
    pub fn cardinality(&self) -> u64 {
        self.entries.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of distinct elements.
    pub fn distinct(&self) -> usize {
        self.entries.len()
    }

    pub fn multiplicity(&self, element: &T) -> u64 {
        self.entries.get(element).copied().unwrap_or(0)
    }

    pub fn contains(&self, element: &T) -> bool {
        self.entries.contains_key(element)
    }

    /// Adds `n` occurrences of `element`. Adding zero is a no-op.
    pub fn insert(&mut self, element: T, n: u64) {
        if n == 0 {
            return;
        }
        *self.entries.entry(element).or_insert(0) += n;
    }

    /// Iterates `(element, multiplicity)` pairs in element order.
    pub fn iter(&self) -> btree_map::Iter<'_, T, u64> {
        self.entries.iter()
    }

    pub fn elements(&self) -> btree_map::Keys<'_, T, u64> {
        self.entries.keys()
    }

    /// Keeps only the entries whose element satisfies `keep`.
    pub fn filtered(&self, mut keep: impl FnMut(&T) -> bool) -> Self
    where
        T: Clone,
    {
        Self {
            entries: self
                .entries
                .iter()
                .filter(|(e, _)| keep(e))
                .map(|(e, n)| (e.clone(), *n))
                .collect(),
        }
    }

    /// Additive union: multiplicities add elementwise.
    pub fn bag_sum(&self, other: &Self) -> Self
    where
        T: Clone,
    {
        let mut out = self.clone();
        out.absorb(other);
        out
    }

    /// In-place additive union.
    pub fn absorb(&mut self, other: &Self)
    where
        T: Clone,
    {
        for (e, n) in &other.entries {
            self.insert(e.clone(), *n);
        }
    }

    /// Returns a copy with `n` occurrences of `element` removed.
    pub fn remove(&self, element: &T, n: u64) -> Result<Self, MultisetError>
    where
        T: Clone + fmt::Debug,
    {
        let mut out = self.clone();
        out.remove_in_place(element, n)?;
        Ok(out)
    }

    /// Removes `n` occurrences of `element`, leaving `self` untouched on error.
    pub fn remove_in_place(&mut self, element: &T, n: u64) -> Result<(), MultisetError>
    where
        T: fmt::Debug,
    {
        if n == 0 {
            return Ok(());
        }
        let held = self.multiplicity(element);
        if held < n {
            return Err(MultisetError::InsufficientMultiplicity {
                element: format!("{element:?}"),
                requested: n,
                held,
            });
        }
        if held == n {
            self.entries.remove(element);
        } else if let Some(m) = self.entries.get_mut(element) {
            *m -= n;
        }
        Ok(())
    }

    /// Elementwise subtraction of a sub-bag. Fails if `other` is not contained in `self`.
    pub fn difference(&self, other: &Self) -> Result<Self, MultisetError>
    where
        T: Clone + fmt::Debug,
    {
        let mut out = self.clone();
        for (e, n) in &other.entries {
            out.remove_in_place(e, *n)?;
        }
        Ok(out)
    }

    /// True when every multiplicity in `self` is at most the one in `other`.
    pub fn is_subset(&self, other: &Self) -> bool {
        self.entries
            .iter()
            .all(|(e, n)| other.multiplicity(e) >= *n)
    }

    /// Expands into one element per occurrence, in element order.
    pub fn occurrences(&self) -> impl Iterator<Item = &T> + '_ {
        self.entries
            .iter()
            .flat_map(|(e, n)| std::iter::repeat_n(e, *n as usize))
    }
}

impl<T: Ord + Clone> Add for &Multiset<T> {
    type Output = Multiset<T>;

    fn add(self, rhs: Self) -> Multiset<T> {
        self.bag_sum(rhs)
    }
}

impl<T: Ord> FromIterator<T> for Multiset<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut s = Self::new();
        for e in iter {
            s.insert(e, 1);
        }
        s
    }
}

impl<T: Ord> FromIterator<(T, u64)> for Multiset<T> {
    fn from_iter<I: IntoIterator<Item = (T, u64)>>(iter: I) -> Self {
        let mut s = Self::new();
        for (e, n) in iter {
            s.insert(e, n);
        }
        s
    }
}

impl<T: Ord> Extend<(T, u64)> for Multiset<T> {
    fn extend<I: IntoIterator<Item = (T, u64)>>(&mut self, iter: I) {
        for (e, n) in iter {
            self.insert(e, n);
        }
    }
}

impl<'a, T: Ord> IntoIterator for &'a Multiset<T> {
    type Item = (&'a T, &'a u64);
    type IntoIter = btree_map::Iter<'a, T, u64>;

    fn into_iter(self) -> Self::IntoIter {
        self.entries.iter()
    }
}

impl<T: Ord + fmt::Debug> fmt::Debug for Multiset<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.entries.iter()).finish()
    }
}

impl<T: Ord + fmt::Display> fmt::Display for Multiset<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return f.write_str("{}");
        }
        f.write_str("{")?;
        for (i, (e, n)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            if *n == 1 {
                write!(f, "{e}")?;
            } else {
                write!(f, "{e}:{n}")?;
            }
        }
        f.write_str("}")
    }
}

// Serialized as a list of `[element, count]` pairs so non-string elements work in JSON.
impl<T: Ord + Serialize> Serialize for Multiset<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.entries.iter())
    }
}

impl<'de, T: Ord + Deserialize<'de>> Deserialize<'de> for Multiset<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let pairs = Vec::<(T, u64)>::deserialize(deserializer)?;
        Ok(pairs.into_iter().collect())
    }
}
