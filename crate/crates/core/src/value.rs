//! Values, declared domains and bitset value sets.
//!
//! A [`Domain`] is an ordered list of distinct values as declared in a table
//! or CSP file. Everything downstream refers to values by their position in
//! the owning domain, and sets of values are [`ValueSet`] bitsets over those
//! positions. Iteration is always in declaration order.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Largest supported domain size; one `u64` word per set.
pub const MAX_DOMAIN: usize = 64;

/// An atom from a finite alphabet, rendered as its source token.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Value(Arc<str>);

impl Value {
    pub fn new(token: impl AsRef<str>) -> Self {
        Value(Arc::from(token.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::new(s)
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value(Arc::from(s))
    }
}

/// A set of value positions, at most [`MAX_DOMAIN`] wide.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ValueSet(u64);

impl ValueSet {
    pub const EMPTY: ValueSet = ValueSet(0);

    pub fn from_bits(bits: u64) -> Self {
        ValueSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn singleton(index: usize) -> Self {
        debug_assert!(index < MAX_DOMAIN);
        ValueSet(1 << index)
    }

    /// The set `{0, .., len-1}`.
    pub fn full(len: usize) -> Self {
        debug_assert!(len <= MAX_DOMAIN);
        if len == MAX_DOMAIN {
            ValueSet(u64::MAX)
        } else {
            ValueSet((1u64 << len) - 1)
        }
    }

    pub fn contains(self, index: usize) -> bool {
        index < MAX_DOMAIN && self.0 & (1 << index) != 0
    }

    pub fn insert(&mut self, index: usize) {
        self.0 |= 1 << index;
    }

    /// Removes `index`; returns whether it was present.
    pub fn remove(&mut self, index: usize) -> bool {
        let present = self.contains(index);
        self.0 &= !(1 << index);
        present
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_singleton(self) -> bool {
        self.0.is_power_of_two()
    }

    /// The smallest member, if any.
    pub fn first(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    pub fn is_subset(self, other: ValueSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: ValueSet) -> ValueSet {
        ValueSet(self.0 | other.0)
    }

    pub fn intersection(self, other: ValueSet) -> ValueSet {
        ValueSet(self.0 & other.0)
    }

    pub fn difference(self, other: ValueSet) -> ValueSet {
        ValueSet(self.0 & !other.0)
    }

    pub fn iter(self) -> ValueSetIter {
        ValueSetIter(self.0)
    }

    /// All non-empty subsets of `self`, in increasing bit-pattern order.
    pub fn nonempty_subsets(self) -> impl Iterator<Item = ValueSet> {
        // Standard submask walk, reversed so the output is ascending.
        let mut subs = Vec::with_capacity((1usize << self.len().min(20)).saturating_sub(1));
        let mut sub = self.0;
        while sub != 0 {
            subs.push(ValueSet(sub));
            sub = (sub - 1) & self.0;
        }
        subs.into_iter().rev()
    }
}

impl Ord for ValueSet {
    /// Lexicographic order on the ascending element lists.
    fn cmp(&self, other: &Self) -> Ordering {
        let mut a = self.iter();
        let mut b = other.iter();
        loop {
            match (a.next(), b.next()) {
                (None, None) => return Ordering::Equal,
                (None, Some(_)) => return Ordering::Less,
                (Some(_), None) => return Ordering::Greater,
                (Some(x), Some(y)) if x != y => return x.cmp(&y),
                _ => {}
            }
        }
    }
}

impl PartialOrd for ValueSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for ValueSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl FromIterator<usize> for ValueSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut set = ValueSet::EMPTY;
        for i in iter {
            set.insert(i);
        }
        set
    }
}

impl IntoIterator for ValueSet {
    type Item = usize;
    type IntoIter = ValueSetIter;

    fn into_iter(self) -> ValueSetIter {
        self.iter()
    }
}

pub struct ValueSetIter(u64);

impl Iterator for ValueSetIter {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(i)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for ValueSetIter {}

/// A declared domain: distinct values in declaration order.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Domain {
    values: Vec<Value>,
}

impl Domain {
    /// Builds a domain for variable `var`, rejecting duplicates and
    /// oversized alphabets.
    pub fn new<I, V>(var: &str, values: I) -> Result<Self>
    where
        I: IntoIterator<Item = V>,
        V: Into<Value>,
    {
        let mut out: Vec<Value> = Vec::new();
        for v in values {
            let v = v.into();
            if out.contains(&v) {
                return Err(Error::DuplicateValue {
                    var: var.to_string(),
                    value: v.to_string(),
                });
            }
            out.push(v);
        }
        if out.len() > MAX_DOMAIN {
            return Err(Error::DomainTooLarge {
                var: var.to_string(),
                size: out.len(),
                max: MAX_DOMAIN,
            });
        }
        Ok(Domain { values: out })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Value] {
        &self.values
    }

    pub fn value(&self, index: usize) -> &Value {
        &self.values[index]
    }

    pub fn index_of(&self, value: &Value) -> Option<usize> {
        self.values.iter().position(|v| v == value)
    }

    pub fn index_of_str(&self, token: &str) -> Option<usize> {
        self.values.iter().position(|v| v.as_str() == token)
    }

    pub fn contains(&self, value: &Value) -> bool {
        self.index_of(value).is_some()
    }

    pub fn all(&self) -> ValueSet {
        ValueSet::full(self.len())
    }

    /// Positions of `values`, failing on the first value outside the domain.
    pub fn set_of<'a, I>(&self, var: &str, values: I) -> Result<ValueSet>
    where
        I: IntoIterator<Item = &'a Value>,
    {
        let mut set = ValueSet::EMPTY;
        for v in values {
            let i = self.index_of(v).ok_or_else(|| Error::ValueOutsideDomain {
                var: var.to_string(),
                value: v.to_string(),
            })?;
            set.insert(i);
        }
        Ok(set)
    }

    /// The values at the positions in `set`, in declaration order.
    pub fn values_of(&self, set: ValueSet) -> Vec<Value> {
        set.iter().map(|i| self.values[i].clone()).collect()
    }

    /// Sub-domain keeping declaration order.
    pub fn subdomain(&self, set: ValueSet) -> Domain {
        Domain {
            values: self.values_of(set),
        }
    }
}

impl fmt::Debug for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.values.iter()).finish()
    }
}
