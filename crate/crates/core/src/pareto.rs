//! Pareto dominance and non-dominated label sets.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bi-objective cost: `f1` is path length in 10/14 units, `f2` accumulated
/// terrain cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(from = "[u64; 2]", into = "[u64; 2]")]
pub struct ObjectiveVector {
    pub f1: u64,
    pub f2: u64,
}

impl ObjectiveVector {
    pub const ZERO: Self = Self { f1: 0, f2: 0 };

    pub const fn new(f1: u64, f2: u64) -> Self {
        Self { f1, f2 }
    }

    pub fn components(&self) -> [u64; 2] {
        [self.f1, self.f2]
    }

    pub fn checked_add(self, rhs: Self) -> Result<Self> {
        Ok(Self {
            f1: self.f1.checked_add(rhs.f1).ok_or(Error::Overflow)?,
            f2: self.f2.checked_add(rhs.f2).ok_or(Error::Overflow)?,
        })
    }

    pub fn checked_sub(self, rhs: Self) -> Option<Self> {
        Some(Self {
            f1: self.f1.checked_sub(rhs.f1)?,
            f2: self.f2.checked_sub(rhs.f2)?,
        })
    }
}

impl From<[u64; 2]> for ObjectiveVector {
    fn from([f1, f2]: [u64; 2]) -> Self {
        Self { f1, f2 }
    }
}

impl From<ObjectiveVector> for [u64; 2] {
    fn from(v: ObjectiveVector) -> Self {
        v.components()
    }
}

impl fmt::Display for ObjectiveVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.f1, self.f2)
    }
}

/// `a` dominates `b` over any number of objectives: `a <= b` componentwise
/// and `a != b`.
pub fn dominates_components(a: &[u64], b: &[u64]) -> bool {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).all(|(x, y)| x <= y) && a != b
}

pub fn dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> bool {
    dominates_components(&a.components(), &b.components())
}

/// Mutually non-dominated vectors in canonical order: `f1` strictly
/// increasing, hence `f2` strictly decreasing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<ObjectiveVector>", into = "Vec<ObjectiveVector>")]
pub struct LabelSet {
    vectors: Vec<ObjectiveVector>,
}

impl LabelSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn singleton(v: ObjectiveVector) -> Self {
        Self { vectors: vec![v] }
    }

    /// Accepts `vectors` only if they are already canonical.
    pub fn from_canonical(vectors: Vec<ObjectiveVector>) -> Result<Self> {
        let ok = vectors
            .windows(2)
            .all(|w| w[0].f1 < w[1].f1 && w[0].f2 > w[1].f2);
        if !ok {
            return Err(Error::Database(
                "label set is not canonical and mutually non-dominated".into(),
            ));
        }
        Ok(Self { vectors })
    }

    /// Wraps `vectors` without any checks. Only for building deliberately
    /// corrupted databases in tests.
    #[doc(hidden)]
    pub fn from_unchecked(vectors: Vec<ObjectiveVector>) -> Self {
        Self { vectors }
    }

    pub fn as_slice(&self) -> &[ObjectiveVector] {
        &self.vectors
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ObjectiveVector> {
        self.vectors.iter()
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn contains(&self, v: &ObjectiveVector) -> bool {
        self.vectors.binary_search(v).is_ok()
    }

    /// True if some member dominates or equals `v`.
    pub fn covers(&self, v: &ObjectiveVector) -> bool {
        // the lexicographic predecessor-or-equal has the smallest f2 among
        // all members with f1 <= v.f1
        match self.vectors.binary_search(v) {
            Ok(_) => true,
            Err(0) => false,
            Err(pos) => self.vectors[pos - 1].f2 <= v.f2,
        }
    }

    /// Inserts `v` keeping the set canonical; returns whether it changed.
    pub fn insert(&mut self, v: ObjectiveVector) -> bool {
        let pos = match self.vectors.binary_search(&v) {
            Ok(_) => return false,
            Err(pos) => pos,
        };
        if pos > 0 && self.vectors[pos - 1].f2 <= v.f2 {
            return false;
        }
        let end = pos
            + self.vectors[pos..]
                .iter()
                .take_while(|w| w.f2 >= v.f2)
                .count();
        self.vectors.splice(pos..end, std::iter::once(v));
        true
    }

    /// Appends `v`, which must be lexicographically greater than every
    /// member; returns false (and leaves the set unchanged) if it is covered.
    pub(crate) fn push_sorted(&mut self, v: ObjectiveVector) -> bool {
        match self.vectors.last() {
            Some(last) if last.f2 <= v.f2 => false,
            _ => {
                debug_assert!(self.vectors.last().is_none_or(|l| l.f1 < v.f1));
                self.vectors.push(v);
                true
            }
        }
    }
}

impl TryFrom<Vec<ObjectiveVector>> for LabelSet {
    type Error = Error;

    fn try_from(v: Vec<ObjectiveVector>) -> Result<Self> {
        Self::from_canonical(v)
    }
}

impl From<LabelSet> for Vec<ObjectiveVector> {
    fn from(ls: LabelSet) -> Self {
        ls.vectors
    }
}

impl<'a> IntoIterator for &'a LabelSet {
    type Item = &'a ObjectiveVector;
    type IntoIter = std::slice::Iter<'a, ObjectiveVector>;

    fn into_iter(self) -> Self::IntoIter {
        self.vectors.iter()
    }
}

impl FromIterator<ObjectiveVector> for LabelSet {
    fn from_iter<I: IntoIterator<Item = ObjectiveVector>>(iter: I) -> Self {
        dom_chk(iter)
    }
}

/// Reduces `vs` to its non-dominated members, collapsing duplicates.
pub fn dom_chk(vs: impl IntoIterator<Item = ObjectiveVector>) -> LabelSet {
    let mut all: Vec<ObjectiveVector> = vs.into_iter().collect();
    all.sort_unstable();
    let mut out = LabelSet::new();
    for v in all {
        out.push_sorted(v);
    }
    out
}

/// Functional form of [`LabelSet::insert`].
pub fn insert_nondominated(ls: &LabelSet, v: ObjectiveVector) -> (LabelSet, bool) {
    let mut out = ls.clone();
    let changed = out.insert(v);
    (out, changed)
}
