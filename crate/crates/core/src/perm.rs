//! Permutations of integer blocks and containment of length-3 patterns.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One of the six permutations of `{1, 2, 3}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pattern {
    #[serde(rename = "123")]
    P123,
    #[serde(rename = "132")]
    P132,
    #[serde(rename = "213")]
    P213,
    #[serde(rename = "231")]
    P231,
    #[serde(rename = "312")]
    P312,
    #[serde(rename = "321")]
    P321,
}

impl Pattern {
    pub const ALL: [Pattern; 6] = [
        Pattern::P123,
        Pattern::P132,
        Pattern::P213,
        Pattern::P231,
        Pattern::P312,
        Pattern::P321,
    ];

    /// One-line notation, e.g. `[3, 1, 2]`.
    pub fn digits(self) -> [u8; 3] {
        match self {
            Pattern::P123 => [1, 2, 3],
            Pattern::P132 => [1, 3, 2],
            Pattern::P213 => [2, 1, 3],
            Pattern::P231 => [2, 3, 1],
            Pattern::P312 => [3, 1, 2],
            Pattern::P321 => [3, 2, 1],
        }
    }

    pub fn reversed(self) -> Pattern {
        match self {
            Pattern::P123 => Pattern::P321,
            Pattern::P132 => Pattern::P231,
            Pattern::P213 => Pattern::P312,
            Pattern::P231 => Pattern::P132,
            Pattern::P312 => Pattern::P213,
            Pattern::P321 => Pattern::P123,
        }
    }

    pub fn complemented(self) -> Pattern {
        match self {
            Pattern::P123 => Pattern::P321,
            Pattern::P132 => Pattern::P312,
            Pattern::P213 => Pattern::P231,
            Pattern::P231 => Pattern::P213,
            Pattern::P312 => Pattern::P132,
            Pattern::P321 => Pattern::P123,
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = self.digits();
        write!(f, "{a}{b}{c}")
    }
}

impl FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "123" => Ok(Pattern::P123),
            "132" => Ok(Pattern::P132),
            "213" => Ok(Pattern::P213),
            "231" => Ok(Pattern::P231),
            "312" => Ok(Pattern::P312),
            "321" => Ok(Pattern::P321),
            other => Err(Error::Parse(format!("unknown pattern {other:?}; expected one of 123, 132, 213, 231, 312, 321"))),
        }
    }
}

/// Does `values` contain an occurrence of 132 (`a_i < a_k < a_j`, `i < j < k`)?
///
/// Right-to-left sweep keeping a decreasing stack; `third` is the largest
/// value that has been popped by something larger to its left, i.e. the
/// best candidate for the "2".
fn has_132<T: Copy + Ord>(values: impl DoubleEndedIterator<Item = T>) -> bool {
    let mut stack: Vec<T> = Vec::new();
    let mut third: Option<T> = None;
    for x in values.rev() {
        if third.is_some_and(|t| x < t) {
            return true;
        }
        while let Some(&top) = stack.last() {
            if top < x {
                third = Some(top);
                stack.pop();
            } else {
                break;
            }
        }
        stack.push(x);
    }
    false
}

/// Does `values` contain 123? Prefix-minimum / suffix-maximum sweep.
fn has_123<T: Copy + Ord>(values: &[T]) -> bool {
    let n = values.len();
    if n < 3 {
        return false;
    }
    let mut suffix_max = values.to_vec();
    for i in (0..n - 1).rev() {
        suffix_max[i] = suffix_max[i].max(suffix_max[i + 1]);
    }
    let mut prefix_min = values[0];
    for j in 1..n - 1 {
        if prefix_min < values[j] && values[j] < suffix_max[j + 1] {
            return true;
        }
        prefix_min = prefix_min.min(values[j]);
    }
    false
}

/// Linear-time containment test on any sequence of distinct values.
pub fn sequence_contains<T: Copy + Ord>(values: &[T], pattern: Pattern) -> bool {
    use std::cmp::Reverse;
    match pattern {
        Pattern::P123 => has_123(values),
        Pattern::P321 => {
            let mirrored: Vec<Reverse<T>> = values.iter().map(|&v| Reverse(v)).collect();
            has_123(&mirrored)
        }
        Pattern::P132 => has_132(values.iter().copied()),
        // reverse(231) = 132
        Pattern::P231 => has_132(values.iter().rev().copied()),
        // complement(312) = 132
        Pattern::P312 => has_132(values.iter().map(|&v| Reverse(v))),
        // reverse(complement(213)) = reverse(231) = 132
        Pattern::P213 => has_132(values.iter().rev().map(|&v| Reverse(v))),
    }
}

/// A bijection of the block `[start, start + len - 1]`, stored as its
/// value sequence. The empty permutation is allowed.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Permutation {
    start: u64,
    values: Vec<u64>,
}

impl Permutation {
    /// Validates that `values` is a rearrangement of `start..start + len`.
    pub fn new(start: u64, values: Vec<u64>) -> Result<Self> {
        let n = values.len();
        let mut seen = vec![false; n];
        for &v in &values {
            let offset = v.checked_sub(start).filter(|&o| (o as usize) < n).ok_or_else(|| {
                Error::InvalidPermutation(format!("value {v} outside block [{start}, {}]", start + n as u64 - 1))
            })?;
            if std::mem::replace(&mut seen[offset as usize], true) {
                return Err(Error::InvalidPermutation(format!("value {v} repeated")));
            }
        }
        Ok(Self { start, values })
    }

    /// A permutation of `[1, n]`.
    pub fn from_one_line(values: Vec<u64>) -> Result<Self> {
        Self::new(1, values)
    }

    pub(crate) fn from_parts_unchecked(start: u64, values: Vec<u64>) -> Self {
        debug_assert!(Self::new(start, values.clone()).is_ok());
        Self { start, values }
    }

    pub fn empty(start: u64) -> Self {
        Self { start, values: Vec::new() }
    }

    pub fn identity(start: u64, len: usize) -> Self {
        Self { start, values: (start..start + len as u64).collect() }
    }

    pub fn start(&self) -> u64 {
        self.start
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<u64> {
        self.values
    }

    /// Relabel the block to start at 1.
    pub fn standardized(&self) -> Permutation {
        self.shifted_to(1)
    }

    /// The same order pattern on the block starting at `start`.
    pub fn shifted_to(&self, start: u64) -> Permutation {
        let values = self.values.iter().map(|&v| v - self.start + start).collect();
        Permutation { start, values }
    }

    pub fn reversed(&self) -> Permutation {
        let mut values = self.values.clone();
        values.reverse();
        Permutation { start: self.start, values }
    }

    pub fn complemented(&self) -> Permutation {
        let top = self.start + self.len() as u64 - 1;
        let values = self.values.iter().map(|&v| top - (v - self.start)).collect();
        Permutation { start: self.start, values }
    }

    pub fn inverse(&self) -> Permutation {
        let mut values = vec![0; self.len()];
        for (i, &v) in self.values.iter().enumerate() {
            values[(v - self.start) as usize] = self.start + i as u64;
        }
        Permutation { start: self.start, values }
    }

    pub fn contains(&self, pattern: Pattern) -> bool {
        sequence_contains(&self.values, pattern)
    }

    pub fn avoids(&self, pattern: Pattern) -> bool {
        !self.contains(pattern)
    }

    /// Least `j ≥ 1` such that the first `j` positions hold exactly the
    /// values `start..start + j`; always exists since `j = len` qualifies.
    pub fn first_irreducible_block(&self) -> Result<usize> {
        if self.is_empty() {
            return Err(Error::EmptyPermutation);
        }
        let mut max = 0u64;
        for (i, &v) in self.values.iter().enumerate() {
            max = max.max(v - self.start);
            if max == i as u64 {
                return Ok(i + 1);
            }
        }
        unreachable!("a permutation maps its whole block to itself")
    }

    /// No proper prefix block `[start, start + k]`, `k + 1 < len`, is mapped
    /// onto itself. A singleton is vacuously irreducible.
    pub fn is_block_irreducible(&self) -> Result<bool> {
        Ok(self.first_irreducible_block()? == self.len())
    }
}

impl fmt::Display for Permutation {
    /// One-line notation, comma separated. Blocks not starting at 1 carry a
    /// `start=<a>;` header.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.start != 1 {
            write!(f, "start={};", self.start)?;
        }
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl FromStr for Permutation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (start, body) = match s.strip_prefix("start=") {
            Some(rest) => {
                let (head, body) = rest
                    .split_once(';')
                    .ok_or_else(|| Error::Parse("missing ';' after start header".into()))?;
                let start = head.trim().parse::<u64>().map_err(|e| Error::Parse(format!("block start: {e}")))?;
                (start, body)
            }
            None => (1, s),
        };
        let values = if body.trim().is_empty() {
            Vec::new()
        } else {
            body.split(',')
                .map(|tok| tok.trim().parse::<u64>().map_err(|e| Error::Parse(format!("value {tok:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?
        };
        Permutation::new(start, values)
    }
}
