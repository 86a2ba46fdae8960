//! Exact uniform samplers over `S_n(τ)` for every `τ ∈ S_3`.
//!
//! For 312, 213, 231 and 132 an avoider splits around its minimum (312,
//! 213) or maximum (231, 132): with the split element at position `j`, the
//! `j - 1` entries to its left and the `n - j` to its right are avoiders of
//! complementary value blocks, and `j` has law `C_{j-1} C_{n-j} / C_n`.
//! That is the first-return decomposition `U A D B` of a Dyck path with
//! `|A| = j - 1`, so one uniform Dyck path drives the whole recursion. The
//! four patterns differ only in which extreme is split off and whether the
//! left part takes the low or the high values.
//!
//! 321 avoiders come from a Dyck path through their left-to-right maxima,
//! and 123 avoiders are reversed 321 avoiders.

use rand::{Rng, RngCore};

use crate::catalan::ln_catalan_over_4pow;
use crate::dyck::{decode_321, matching, sample_dyck_path};
use crate::error::{Error, Result};
use crate::perm::{Pattern, Permutation};
use crate::variates::sample_x_below;

/// Blocks up to this size are sampled in full by the prefix sampler.
pub const DEFAULT_MATERIALIZE_LIMIT: u64 = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Orientation {
    pivot_is_max: bool,
    left_high: bool,
}

impl Orientation {
    fn of(pattern: Pattern) -> Option<Self> {
        let (pivot_is_max, left_high) = match pattern {
            Pattern::P312 => (false, false),
            Pattern::P213 => (false, true),
            Pattern::P231 => (true, false),
            Pattern::P132 => (true, true),
            Pattern::P123 | Pattern::P321 => return None,
        };
        Some(Self { pivot_is_max, left_high })
    }

    /// Values for (pivot, left block start, right block start) when a block
    /// of `len` values starting at `lo` splits into parts of sizes `a`, `b`.
    fn assign(self, lo: u64, len: u64, a: u64, b: u64) -> (u64, u64, u64) {
        match (self.pivot_is_max, self.left_high) {
            (false, false) => (lo, lo + 1, lo + 1 + a),
            (false, true) => (lo, lo + 1 + b, lo + 1),
            (true, false) => (lo + len - 1, lo, lo + a),
            (true, true) => (lo + len - 1, lo + b, lo),
        }
    }
}

/// Whether `pattern` is one of the four that split at an extreme value.
pub fn splits_at_extreme(pattern: Pattern) -> bool {
    Orientation::of(pattern).is_some()
}

fn fill_from_tree(path: &[bool], orientation: Orientation) -> Vec<u64> {
    let n = path.len() / 2;
    let partner = matching(path);
    let mut out = vec![0u64; n];
    // (path start, path end, first position, smallest value)
    let mut work = vec![(0usize, path.len(), 0usize, 1u64)];
    while let Some((lo, hi, pos, val)) = work.pop() {
        if lo == hi {
            continue;
        }
        let close = partner[lo];
        let len = ((hi - lo) / 2) as u64;
        let a = ((close - lo - 1) / 2) as u64;
        let b = len - 1 - a;
        let (pivot, left, right) = orientation.assign(val, len, a, b);
        out[pos + a as usize] = pivot;
        work.push((lo + 1, close, pos, left));
        work.push((close + 1, hi, pos + a as usize + 1, right));
    }
    out
}

/// Uniform element of `S_n(pattern)`.
pub fn sample_avoider<R: RngCore + ?Sized>(n: usize, pattern: Pattern, rng: &mut R) -> Permutation {
    let path = sample_dyck_path(n, rng);
    let values = match Orientation::of(pattern) {
        Some(orientation) => fill_from_tree(&path, orientation),
        None => {
            let mut values = decode_321(&path);
            if pattern == Pattern::P123 {
                values.reverse();
            }
            values
        }
    };
    debug_assert!(!crate::perm::sequence_contains(&values, pattern), "sampler produced a {pattern} occurrence");
    Permutation::from_parts_unchecked(1, values)
}

/// Uniform `pattern`-avoiding image of the block `[start, end]`; the block
/// is empty when `end = start - 1`.
pub fn sample_avoider_image<R: RngCore + ?Sized>(
    start: u64,
    end: u64,
    pattern: Pattern,
    rng: &mut R,
) -> Result<Permutation> {
    if end.saturating_add(1) < start {
        return Err(Error::MalformedBlock { start, end });
    }
    let len = (end + 1 - start) as usize;
    Ok(sample_avoider(len, pattern, rng).shifted_to(start))
}

/// Uniform block-irreducible 321-avoider of `[1, n]`, by rejection from
/// [`sample_avoider`]. Acceptance probability is `C_{n-1} / C_n > 1/4`.
pub fn sample_birr_321<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> Result<Permutation> {
    if n == 0 {
        return Err(Error::TooSmall { what: "n", min: 1, got: 0 });
    }
    loop {
        let candidate = sample_avoider(n, Pattern::P321, rng);
        if candidate.first_irreducible_block()? == n {
            return Ok(candidate);
        }
    }
}

/// `ln P(X + 1 = j) = ln(C_{j-1} 4^{-j}) + ln 2`.
fn ln_hat_x_pmf(j: u64) -> f64 {
    ln_catalan_over_4pow(j - 1) - std::f64::consts::LN_2
}

/// Draws `j` with probability `C_{j-1} C_{n-j} / C_n` for any `n ≥ 1`
/// without big-integer arithmetic.
///
/// Up to normalisation the target is `p(j) p(n+1-j)` with `p` the law of
/// `X + 1`. Proposals are `X + 1` or `n - X` with equal chance (`X` from
/// the random-walk sampler, cut off at `n`), and a proposal is accepted
/// with probability `h(j) / max h` where `h = p p' / (p + p')`. Since
/// `1/p` is convex, `h` peaks at the middle; about 70% of proposals are
/// accepted for large `n`. The acceptance ratio is evaluated in double
/// precision.
pub fn sample_split_large<R: RngCore + ?Sized>(n: u64, rng: &mut R) -> u64 {
    assert!(n >= 1);
    if n == 1 {
        return 1;
    }
    let ln_h = |j: u64| {
        let lp = ln_hat_x_pmf(j);
        let lq = ln_hat_x_pmf(n + 1 - j);
        // -ln(1/p + 1/q)
        let hi = (-lp).max(-lq);
        let lo = (-lp).min(-lq);
        -(hi + (lo - hi).exp().ln_1p())
    };
    let mid = n.div_ceil(2);
    let ln_peak = ln_h(mid).max(ln_h((mid + 1).min(n)));
    loop {
        let from_left = rng.random::<bool>();
        let Some(x) = sample_x_below(n, rng) else { continue };
        let j = if from_left { x + 1 } else { n - x };
        let accept = (ln_h(j) - ln_peak).exp();
        if rng.random::<f64>() < accept {
            return j;
        }
    }
}

/// First `min(k, len)` entries of a uniform `pattern`-avoiding image of
/// `[start, start + len - 1]`, for the four split patterns.
///
/// Blocks up to `materialize_limit` are sampled whole. Larger blocks are
/// split with [`sample_split_large`] and only the parts that reach the
/// first `k` positions are expanded, so `len` may be astronomically large.
pub fn sample_avoider_prefix<R: RngCore + ?Sized>(
    len: u64,
    start: u64,
    pattern: Pattern,
    k: usize,
    materialize_limit: u64,
    rng: &mut R,
) -> Result<Vec<u64>> {
    let orientation = Orientation::of(pattern).ok_or(Error::UnsupportedPattern {
        pattern,
        reason: "prefix sampling needs a pattern that splits at an extreme value",
    })?;
    enum Item {
        Block { len: u64, lo: u64 },
        Entry(u64),
    }
    let mut out = Vec::with_capacity(k.min(len.min(1 << 16) as usize));
    let mut work = vec![Item::Block { len, lo: start }];
    while out.len() < k {
        let Some(item) = work.pop() else { break };
        match item {
            Item::Entry(v) => out.push(v),
            Item::Block { len: 0, .. } => {}
            Item::Block { len, lo } if len <= materialize_limit.max(1) => {
                let full = sample_avoider(len as usize, pattern, rng);
                let need = k - out.len();
                out.extend(full.values().iter().take(need).map(|&v| v - 1 + lo));
            }
            Item::Block { len, lo } => {
                let j = sample_split_large(len, rng);
                let (a, b) = (j - 1, len - j);
                let (pivot, left, right) = orientation.assign(lo, len, a, b);
                work.push(Item::Block { len: b, lo: right });
                work.push(Item::Entry(pivot));
                work.push(Item::Block { len: a, lo: left });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalan::split_weights;
    use crate::enumerate::enumerate_avoiders;
    use crate::rng::RngStream;
    use std::collections::HashMap;

    #[test]
    fn degenerate_sizes() {
        let mut rng = RngStream::new(1, 0);
        for pat in Pattern::ALL {
            assert!(sample_avoider(0, pat, &mut rng).is_empty());
            assert_eq!(sample_avoider(1, pat, &mut rng).values(), &[1]);
        }
        assert!(sample_avoider_image(4, 3, Pattern::P312, &mut rng).unwrap().is_empty());
        assert_eq!(sample_avoider_image(3, 3, Pattern::P312, &mut rng).unwrap().values(), &[3]);
        assert!(matches!(
            sample_avoider_image(5, 2, Pattern::P312, &mut rng),
            Err(Error::MalformedBlock { start: 5, end: 2 })
        ));
    }

    #[test]
    fn outputs_avoid_their_pattern() {
        let mut rng = RngStream::new(17, 0);
        for pat in Pattern::ALL {
            for n in [2usize, 3, 7, 40, 300] {
                for _ in 0..50 {
                    let s = sample_avoider(n, pat, &mut rng);
                    assert!(s.avoids(pat), "{pat}: {s}");
                    assert_eq!(s.len(), n);
                }
            }
        }
    }

    #[test]
    fn image_of_block_is_shifted_avoider() {
        let mut rng = RngStream::new(4, 4);
        let mut seen = HashMap::new();
        for _ in 0..5000 {
            let img = sample_avoider_image(2, 4, Pattern::P312, &mut rng).unwrap();
            assert_eq!(img.start(), 2);
            assert!(img.standardized().avoids(Pattern::P312));
            *seen.entry(img.into_values()).or_insert(0usize) += 1;
        }
        assert_eq!(seen.len(), 5);
        assert!(seen.values().all(|&c| c > 850), "{seen:?}");
    }

    #[test]
    fn birr_examples() {
        let mut rng = RngStream::new(6, 0);
        assert_eq!(sample_birr_321(1, &mut rng).unwrap().values(), &[1]);
        for _ in 0..20 {
            assert_eq!(sample_birr_321(2, &mut rng).unwrap().values(), &[2, 1]);
        }
        let mut seen = HashMap::new();
        for _ in 0..4000 {
            let s = sample_birr_321(3, &mut rng).unwrap();
            *seen.entry(s.into_values()).or_insert(0usize) += 1;
        }
        let mut keys: Vec<_> = seen.keys().cloned().collect();
        keys.sort();
        assert_eq!(keys, vec![vec![2, 3, 1], vec![3, 1, 2]]);
        assert!(sample_birr_321(0, &mut rng).is_err());
    }

    #[test]
    fn split_large_matches_exact_law() {
        let mut rng = RngStream::new(21, 0);
        for n in [2u64, 3, 9, 40] {
            let weights = split_weights(n as usize).unwrap().to_f64();
            let trials = 100_000;
            let mut counts = vec![0usize; n as usize];
            for _ in 0..trials {
                counts[sample_split_large(n, &mut rng) as usize - 1] += 1;
            }
            let chi2: f64 = counts
                .iter()
                .zip(&weights)
                .map(|(&c, &w)| (c as f64 - w * trials as f64).powi(2) / (w * trials as f64))
                .sum();
            // generous: 99.9% point for 39 degrees of freedom is 72.06
            assert!(chi2 < 72.06, "n = {n}: chi2 = {chi2}");
        }
    }

    #[test]
    fn prefix_sampler_matches_enumeration() {
        // With a tiny materialisation limit the large-block path is used at
        // every level; the law of the first three entries must still be the
        // exact uniform marginal.
        let n = 8usize;
        for pat in [Pattern::P312, Pattern::P231, Pattern::P213, Pattern::P132] {
            let mut exact: HashMap<Vec<u64>, f64> = HashMap::new();
            let all: Vec<_> = enumerate_avoiders(n, pat).unwrap().collect();
            for p in &all {
                *exact.entry(p.values()[..3].iter().map(|v| v + 9).collect()).or_default() += 1.0 / all.len() as f64;
            }
            let mut rng = RngStream::new(33, pat as u64);
            let trials = 60_000;
            let mut counts: HashMap<Vec<u64>, usize> = HashMap::new();
            for _ in 0..trials {
                let prefix = sample_avoider_prefix(n as u64, 10, pat, 3, 2, &mut rng).unwrap();
                *counts.entry(prefix).or_default() += 1;
            }
            for key in counts.keys() {
                assert!(exact.contains_key(key), "{pat}: impossible prefix {key:?}");
            }
            let tv: f64 = exact
                .iter()
                .map(|(k, &p)| (p - *counts.get(k).unwrap_or(&0) as f64 / trials as f64).abs())
                .sum::<f64>()
                / 2.0;
            assert!(tv < 0.03, "{pat}: tv {tv}");
        }
    }

    #[test]
    fn prefix_sampler_handles_enormous_blocks() {
        let mut rng = RngStream::new(5, 5);
        for pat in [Pattern::P312, Pattern::P231] {
            for _ in 0..200 {
                let len = 1u64 << 50;
                let prefix = sample_avoider_prefix(len, 7, pat, 4, 1 << 10, &mut rng).unwrap();
                assert_eq!(prefix.len(), 4);
                assert!(prefix.iter().all(|&v| (7..7 + len).contains(&v)));
                assert!(!crate::perm::sequence_contains(&prefix, pat));
            }
        }
        assert!(sample_avoider_prefix(5, 1, Pattern::P321, 2, 10, &mut rng).is_err());
    }
}
