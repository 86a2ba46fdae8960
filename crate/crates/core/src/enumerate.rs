//! Exhaustive enumeration of avoidance classes by filtering all of `S_n`.
//!
//! This is the ground truth the samplers are tested against, so it does
//! not use any of the Catalan decompositions.

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::perm::{Pattern, Permutation};

/// `10!` is about 3.6 million permutations; `12!` is not free.
pub const DEFAULT_EXHAUSTIVE_BOUND: usize = 10;

/// All permutations of `[1, n]` in lexicographic order.
#[derive(Clone, Debug)]
pub struct Permutations {
    next: Option<Vec<u64>>,
}

impl Permutations {
    pub fn new(n: usize) -> Self {
        Self { next: Some((1..=n as u64).collect()) }
    }
}

impl Iterator for Permutations {
    type Item = Vec<u64>;

    fn next(&mut self) -> Option<Vec<u64>> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        // Standard next-permutation step.
        let n = succ.len();
        if n >= 2 {
            if let Some(i) = (0..n - 1).rev().find(|&i| succ[i] < succ[i + 1]) {
                let j = (i + 1..n).rev().find(|&j| succ[j] > succ[i]).expect("pivot has a successor");
                succ.swap(i, j);
                succ[i + 1..].reverse();
                self.next = Some(succ);
            }
        }
        Some(current)
    }
}

fn check_bound(n: usize, bound: usize) -> Result<()> {
    if n > bound {
        Err(Error::AboveExhaustiveBound { n, bound })
    } else {
        Ok(())
    }
}

/// Every `σ ∈ S_n` avoiding `pattern`, lexicographically, under the default
/// bound.
pub fn enumerate_avoiders(n: usize, pattern: Pattern) -> Result<impl Iterator<Item = Permutation>> {
    enumerate_avoiders_bounded(n, pattern, DEFAULT_EXHAUSTIVE_BOUND)
}

pub fn enumerate_avoiders_bounded(
    n: usize,
    pattern: Pattern,
    bound: usize,
) -> Result<impl Iterator<Item = Permutation>> {
    check_bound(n, bound)?;
    Ok(Permutations::new(n)
        .map(|values| Permutation::from_parts_unchecked(1, values))
        .filter(move |p| p.avoids(pattern)))
}

pub fn count_avoiders(n: usize, pattern: Pattern) -> Result<u64> {
    Ok(enumerate_avoiders(n, pattern)?.count() as u64)
}

/// Block-irreducible 321-avoiders of `[n]`, by brute force.
pub fn enumerate_birr_321(n: usize) -> Result<impl Iterator<Item = Permutation>> {
    if n == 0 {
        return Err(Error::TooSmall { what: "n", min: 1, got: 0 });
    }
    Ok(enumerate_avoiders(n, Pattern::P321)?.filter(|p| p.is_block_irreducible().expect("n >= 1")))
}

pub fn count_birr_321(n: usize) -> Result<BigUint> {
    Ok(BigUint::from(enumerate_birr_321(n)?.count()))
}

/// `counts[j - 1]` = number of 321-avoiders of `[n]` whose first
/// self-mapped prefix block has length `j`.
pub fn first_block_profile_321(n: usize) -> Result<Vec<u64>> {
    if n == 0 {
        return Err(Error::TooSmall { what: "n", min: 1, got: 0 });
    }
    let mut counts = vec![0u64; n];
    for p in enumerate_avoiders(n, Pattern::P321)? {
        counts[p.first_irreducible_block()? - 1] += 1;
    }
    Ok(counts)
}
