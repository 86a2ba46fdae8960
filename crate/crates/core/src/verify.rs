//! Experiments that check finite-n laws against exact values and against
//! the limiting objects.
//!
//! Every Monte-Carlo routine takes a base [`RngStream`] and gives trial `k`
//! the substream `k` of a key derived from it, so results do not depend on
//! the number of worker threads. Exact modes enumerate `S_n(τ)` and are
//! limited to the exhaustive bound.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::catalan::{catalan, nu_limit, ratio_to_f64, split_weights, CatalanTable};
use crate::dist::{chi_square_critical, chi_square_statistic, tv_distance, tv_of_vectors, EmpiricalDist, Histogram};
use crate::enumerate::{count_avoiders, count_birr_321, enumerate_avoiders, first_block_profile_321};
use crate::error::{Error, Result};
use crate::limit::{coordinate_pmfs_limit, limit_prefix_213, limit_prefix_321_partial_with, LimitKind, LimitOptions, SegmentKind};
use crate::par::{fold_trials, map_trials};
use crate::perm::{Pattern, Permutation};
use crate::rng::RngStream;
use crate::sampler::sample_avoider;
use crate::variates::{sample_x, x_pmf, XInversion};

fn require(what: &'static str, min: u64, got: u64) -> Result<()> {
    if got < min {
        Err(Error::TooSmall { what, min, got })
    } else {
        Ok(())
    }
}

fn check_coords(n: usize, coords: &[usize]) -> Result<()> {
    for &i in coords {
        if i == 0 || i > n {
            return Err(Error::IndexOutOfRange { index: i, len: n });
        }
    }
    Ok(())
}

/// Monte-Carlo laws of `σ_i` for each `i` in `coords` under the uniform
/// measure on `S_n(pattern)`. Values above `cap` land in `gt-cap`.
pub fn empirical_coordinate_pmfs(
    pattern: Pattern,
    n: usize,
    coords: &[usize],
    cap: usize,
    trials: u64,
    base: &RngStream,
) -> Result<Vec<EmpiricalDist>> {
    check_coords(n, coords)?;
    require("cap", 1, cap as u64)?;
    require("trials", 1, trials)?;
    let hists = fold_trials(
        base,
        trials,
        || vec![Histogram::new(cap); coords.len()],
        |hists, rng| {
            let sigma = sample_avoider(n, pattern, rng);
            for (hist, &i) in hists.iter_mut().zip(coords) {
                hist.record_value(sigma.values()[i - 1]);
            }
        },
        |a, b| a.into_iter().zip(&b).map(|(x, y)| x.merge(y)).collect(),
    );
    hists.into_iter().map(Histogram::into_dist).collect()
}

pub fn empirical_coordinate_pmf(
    pattern: Pattern,
    n: usize,
    i: usize,
    cap: usize,
    trials: u64,
    base: &RngStream,
) -> Result<EmpiricalDist> {
    Ok(empirical_coordinate_pmfs(pattern, n, &[i], cap, trials, base)?.remove(0))
}

/// The exact law of `σ_i` by enumeration of `S_n(pattern)`.
pub fn exact_coordinate_pmf(pattern: Pattern, n: usize, i: usize, cap: usize) -> Result<EmpiricalDist> {
    check_coords(n, &[i])?;
    require("cap", 1, cap as u64)?;
    let mut hist = Histogram::new(cap);
    for sigma in enumerate_avoiders(n, pattern)? {
        hist.record_value(sigma.values()[i - 1]);
    }
    let total = hist.total() as f64;
    EmpiricalDist::from_masses(cap, hist.counts().iter().map(|&c| c as f64 / total).collect())
}

/// Law of the position of the split element: `σ^{-1}(1)` for 312 and 213,
/// `σ^{-1}(n)` for 231 and 132.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositionalLaw {
    pub pattern: Pattern,
    pub n: usize,
    /// `None` in exact mode.
    pub trials: Option<u64>,
    /// Observed law, index `j - 1`.
    pub observed: Vec<f64>,
    /// `C_{j-1} C_{n-j} / C_n`, index `j - 1`.
    pub expected: Vec<f64>,
    pub max_abs_error: f64,
    /// Largest `|observed - expected| / se` over cells (0 in exact mode).
    pub max_z: f64,
}

fn split_target(pattern: Pattern) -> Result<bool> {
    match pattern {
        Pattern::P312 | Pattern::P213 => Ok(false),
        Pattern::P231 | Pattern::P132 => Ok(true),
        Pattern::P123 | Pattern::P321 => Err(Error::UnsupportedPattern {
            pattern,
            reason: "no positional split law for this pattern",
        }),
    }
}

fn split_position(sigma: &Permutation, of_max: bool) -> usize {
    let target = if of_max { sigma.len() as u64 } else { 1 };
    sigma.values().iter().position(|&v| v == target).expect("value present") + 1
}

/// Exact comparison by enumeration: counts are compared with the split
/// weights as rationals, so the error is exactly zero when the law holds.
pub fn check_positional_law_exact(n: usize, pattern: Pattern) -> Result<PositionalLaw> {
    let of_max = split_target(pattern)?;
    require("n", 1, n as u64)?;
    let mut counts = vec![0u64; n];
    for sigma in enumerate_avoiders(n, pattern)? {
        counts[split_position(&sigma, of_max) - 1] += 1;
    }
    let total: u64 = counts.iter().sum();
    let weights = split_weights(n)?.weights;
    let mut max_err = BigRational::zero();
    for (c, w) in counts.iter().zip(&weights) {
        let diff = BigRational::new((*c).into(), total.into()) - w;
        let diff = if diff < BigRational::zero() { -diff } else { diff };
        if diff > max_err {
            max_err = diff;
        }
    }
    Ok(PositionalLaw {
        pattern,
        n,
        trials: None,
        observed: counts.iter().map(|&c| c as f64 / total as f64).collect(),
        expected: weights.iter().map(ratio_to_f64).collect(),
        max_abs_error: ratio_to_f64(&max_err),
        max_z: 0.0,
    })
}

pub fn check_positional_law_mc(n: usize, pattern: Pattern, trials: u64, base: &RngStream) -> Result<PositionalLaw> {
    let of_max = split_target(pattern)?;
    require("n", 1, n as u64)?;
    require("trials", 1, trials)?;
    let counts = fold_trials(
        base,
        trials,
        || vec![0u64; n],
        |counts, rng| counts[split_position(&sample_avoider(n, pattern, rng), of_max) - 1] += 1,
        |mut a, b| {
            a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
            a
        },
    );
    let expected = split_weights(n)?.to_f64();
    let observed: Vec<f64> = counts.iter().map(|&c| c as f64 / trials as f64).collect();
    let mut max_abs_error = 0.0f64;
    let mut max_z = 0.0f64;
    for (o, e) in observed.iter().zip(&expected) {
        let err = (o - e).abs();
        max_abs_error = max_abs_error.max(err);
        let se = (e * (1.0 - e) / trials as f64).sqrt();
        if se > 0.0 {
            max_z = max_z.max(err / se);
        }
    }
    Ok(PositionalLaw { pattern, n, trials: Some(trials), observed, expected, max_abs_error, max_z })
}

/// `#{σ ∈ S_n(132) : σ_1 = v}` for `v = 1..=l`.
///
/// A 132-avoider is `α n β` with `α` above `β`; if `n` sits at position
/// `p ≥ 2`, then `σ_1 = (n - p) + α_1`. The first entry has the same law on
/// `S_n(123)`: the Simion-Schmidt bijection keeps left-to-right minima.
pub fn first_entry_counts(n: usize, l: usize) -> Vec<BigUint> {
    let c = CatalanTable::shared().prefix(n);
    // g[m][w - 1] = #{σ ∈ S_m(132) : σ_1 = w}, w ≤ l
    let mut g: Vec<Vec<BigUint>> = vec![vec![BigUint::zero(); l]; n + 1];
    for m in 1..=n {
        for w in 1..=l.min(m) {
            let mut total = if w == m { c[m - 1].clone() } else { BigUint::zero() };
            // β has size m - p ≤ w - 1
            for (beta, cb) in c.iter().enumerate().take(w.min(m - 1)) {
                let alpha = m - 1 - beta;
                let first = w - beta;
                if first <= alpha {
                    total += &g[alpha][first - 1] * cb;
                }
            }
            g[m][w - 1] = total;
        }
    }
    g.swap_remove(n)
}

fn log10_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        let v: f64 = num_traits::ToPrimitive::to_f64(x).unwrap_or(f64::INFINITY);
        return v.log10();
    }
    let shift = bits - 64;
    let top: f64 = num_traits::ToPrimitive::to_f64(&(x >> shift)).expect("64 bits");
    top.log10() + shift as f64 * std::f64::consts::LOG10_2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EscapeRow {
    pub n: usize,
    /// Monte-Carlo estimate of `P(σ_j ≤ L)`, or the exact value when
    /// `trials` is `None`.
    pub estimate: f64,
    pub trials: Option<u64>,
    /// Exact probability when available (enumeration for small n, the
    /// first-entry recursion when `j = 1`).
    pub exact: Option<f64>,
    /// `log10` of the exact probability; finite even when `exact`
    /// underflows.
    pub exact_log10: Option<f64>,
}

/// `P_n(σ_j ≤ L)` across an n-grid for 123 or 132, whose limits send every
/// coordinate to ∞.
///
/// Grid points within the exhaustive bound are computed exactly by
/// enumeration; the rest are estimated from `trials` samples. For `j = 1`
/// every row also carries the exact value from [`first_entry_counts`].
pub fn escape_scan(
    pattern: Pattern,
    j: usize,
    l: usize,
    grid: &[usize],
    trials: u64,
    base: &RngStream,
) -> Result<Vec<EscapeRow>> {
    if !matches!(pattern, Pattern::P123 | Pattern::P132) {
        return Err(Error::UnsupportedPattern { pattern, reason: "the escape scan covers 123 and 132" });
    }
    require("j", 1, j as u64)?;
    require("L", 1, l as u64)?;
    if let Some(&n) = grid.iter().find(|&&n| n < j) {
        return Err(Error::IndexOutOfRange { index: j, len: n });
    }
    let mut rows = Vec::with_capacity(grid.len());
    for &n in grid {
        let (exact, exact_log10) = if n <= 8 {
            let total = catalan(n);
            let hits = BigUint::from(
                enumerate_avoiders(n, pattern)?.filter(|s| s.values()[j - 1] <= l as u64).count(),
            );
            let p = ratio_to_f64(&BigRational::new(hits.clone().into(), total.clone().into()));
            (Some(p), Some(if hits.is_zero() { f64::NEG_INFINITY } else { log10_biguint(&hits) - log10_biguint(&total) }))
        } else if j == 1 {
            let hits: BigUint = first_entry_counts(n, l).iter().sum();
            let total = catalan(n);
            let p = ratio_to_f64(&BigRational::new(hits.clone().into(), total.clone().into()));
            (Some(p), Some(log10_biguint(&hits) - log10_biguint(&total)))
        } else {
            (None, None)
        };
        let row = if n <= 8 {
            EscapeRow { n, estimate: exact.expect("exact"), trials: None, exact, exact_log10 }
        } else {
            require("trials", 1, trials)?;
            let hits = fold_trials(
                &base.child(n as u64),
                trials,
                || 0u64,
                |acc, rng| *acc += u64::from(sample_avoider(n, pattern, rng).values()[j - 1] <= l as u64),
                |a, b| a + b,
            );
            EscapeRow { n, estimate: hits as f64 / trials as f64, trials: Some(trials), exact, exact_log10 }
        };
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CfPoint {
    pub t: f64,
    pub empirical: Complex64,
    pub reference: Complex64,
    pub abs_error: f64,
}

/// `E e^{-itZ} = exp(-(√2/2) |t|^{1/2} (1 + i sgn t))` for the one-sided
/// stable(1/2) limit of `T_n^X / n²`.
pub fn stable_reference(t: f64) -> Complex64 {
    let a = std::f64::consts::FRAC_1_SQRT_2 * t.abs().sqrt();
    let sgn = if t > 0.0 {
        1.0
    } else if t < 0.0 {
        -1.0
    } else {
        0.0
    };
    (-Complex64::new(a, a * sgn)).exp()
}

/// `T_n^X = X_1 + ... + X_n` for each trial, in trial order.
pub fn sample_partial_sums(n: u64, trials: u64, base: &RngStream) -> Vec<u64> {
    map_trials(base, trials, |_, rng| (0..n).fold(0u64, |acc, _| acc.saturating_add(sample_x(rng))))
}

/// Empirical characteristic function of `T_n^X / n²` at each `t`.
/// Summation runs in trial order so the result is reproducible bit for bit.
pub fn stable_cf_check(n: u64, trials: u64, ts: &[f64], base: &RngStream) -> Result<Vec<CfPoint>> {
    require("n", 1, n)?;
    require("trials", 1, trials)?;
    let scale = (n as f64) * (n as f64);
    let sums = sample_partial_sums(n, trials, base);
    Ok(ts
        .iter()
        .map(|&t| {
            let total = sums.iter().fold(Complex64::zero(), |acc, &s| {
                let theta = t * (s as f64 / scale);
                acc + Complex64::new(theta.cos(), -theta.sin())
            });
            let empirical = total / trials as f64;
            let reference = stable_reference(t);
            CfPoint { t, empirical, reference, abs_error: (empirical - reference).norm() }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub i: usize,
    pub n: usize,
    pub tv: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub pattern: Pattern,
    pub cap: usize,
    pub trials: u64,
    pub coords: Vec<usize>,
    pub grid: Vec<usize>,
    /// Limit-generator law per coordinate.
    pub limit: Vec<EmpiricalDist>,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    /// `2 / √trials`, the allowance for sampling noise when comparing TV
    /// values along the grid.
    pub fn noise_allowance(&self) -> f64 {
        2.0 / (self.trials as f64).sqrt()
    }

    pub fn tv_at(&self, i: usize, n: usize) -> Option<f64> {
        self.rows.iter().find(|r| r.i == i && r.n == n).map(|r| r.tv)
    }

    /// TV along the grid for coordinate `i`.
    pub fn series(&self, i: usize) -> Vec<f64> {
        self.grid.iter().filter_map(|&n| self.tv_at(i, n)).collect()
    }

    /// Each step along the grid increases TV by at most the noise allowance.
    pub fn is_nonincreasing(&self) -> bool {
        let slack = self.noise_allowance();
        self.coords.iter().all(|&i| self.series(i).windows(2).all(|w| w[1] <= w[0] + slack))
    }

    pub fn max_tv_at_largest_n(&self) -> f64 {
        let n = *self.grid.iter().max().expect("non-empty grid");
        self.rows.iter().filter(|r| r.n == n).map(|r| r.tv).fold(0.0, f64::max)
    }
}

/// TV distance between the finite-n coordinate laws and the limit
/// generator's coordinate laws, per coordinate and grid point. Both sides
/// use `trials` samples.
pub fn convergence_report(
    pattern: Pattern,
    coords: &[usize],
    cap: usize,
    grid: &[usize],
    trials: u64,
    base: &RngStream,
    options: &LimitOptions,
) -> Result<ConvergenceReport> {
    let kind = LimitKind::for_pattern(pattern)?;
    if kind == LimitKind::L321Partial {
        return Err(Error::UnsupportedPattern { pattern, reason: "only part of the 321 limit is known" });
    }
    if grid.is_empty() || coords.is_empty() {
        return Err(Error::InvalidArgument("empty n-grid or coordinate list".into()));
    }
    let limit = coordinate_pmfs_limit(kind, coords, cap, trials, &base.child(0), options)?;
    let mut rows = Vec::new();
    for &n in grid {
        let finite = empirical_coordinate_pmfs(pattern, n, coords, cap, trials, &base.child(n as u64 + 1))?;
        for ((&i, f), l) in coords.iter().zip(&finite).zip(&limit) {
            rows.push(ConvergenceRow { i, n, tv: tv_distance(f, l)? });
        }
    }
    Ok(ConvergenceReport { pattern, cap, trials, coords: coords.to_vec(), grid: grid.to_vec(), limit, rows })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformityResult {
    pub pattern: Pattern,
    pub n: usize,
    pub classes: usize,
    pub trials: u64,
    pub statistic: f64,
    pub critical: f64,
    pub level: f64,
    /// Samples that contained the pattern or were not permutations of `[n]`.
    pub violations: u64,
}

impl UniformityResult {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.statistic <= self.critical
    }
}

/// Pearson chi-square of sampler output against the uniform law on the
/// enumerated class, with every sample checked for avoidance.
pub fn check_uniformity(pattern: Pattern, n: usize, trials: u64, level: f64, base: &RngStream) -> Result<UniformityResult> {
    require("trials", 1, trials)?;
    if !(0.0..1.0).contains(&level) {
        return Err(Error::InvalidArgument(format!("level {level} outside [0, 1)")));
    }
    let index: HashMap<Vec<u64>, usize> =
        enumerate_avoiders(n, pattern)?.enumerate().map(|(k, p)| (p.into_values(), k)).collect();
    let classes = index.len();
    let (counts, violations) = fold_trials(
        base,
        trials,
        || (vec![0u64; classes], 0u64),
        |(counts, bad), rng| {
            let sigma = sample_avoider(n, pattern, rng);
            match index.get(sigma.values()) {
                Some(&k) if !crate::oracle::contains_naive(sigma.values(), pattern) => counts[k] += 1,
                _ => *bad += 1,
            }
        },
        |(mut a, x), (b, y)| {
            a.iter_mut().zip(&b).for_each(|(p, q)| *p += q);
            (a, x + y)
        },
    );
    let probabilities = vec![1.0 / classes as f64; classes];
    Ok(UniformityResult {
        pattern,
        n,
        classes,
        trials,
        statistic: chi_square_statistic(&counts, &probabilities),
        critical: chi_square_critical(classes as u64 - 1, level),
        level,
        violations,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRow {
    /// A pattern, or `birr-321` for block-irreducible 321-avoiders.
    pub class: String,
    pub n: usize,
    pub count: String,
    pub expected: String,
}

impl CountRow {
    pub fn matches(&self) -> bool {
        self.count == self.expected
    }
}

/// Enumerated class sizes against Catalan numbers: `|S_n(τ)| = C_n` for
/// every pattern, `C_{n-1}` block-irreducible 321-avoiders, and
/// `C_{j-1} C_{n-j}` 321-avoiders whose first self-mapped block has length
/// `j` (one row per `(n, j)`, class `first-block-j`).
pub fn count_check(max_n: usize) -> Result<Vec<CountRow>> {
    let mut rows = Vec::new();
    for pattern in Pattern::ALL {
        for n in 0..=max_n {
            rows.push(CountRow {
                class: pattern.to_string(),
                n,
                count: count_avoiders(n, pattern)?.to_string(),
                expected: catalan(n).to_string(),
            });
        }
    }
    for n in 1..=max_n {
        rows.push(CountRow {
            class: "birr-321".into(),
            n,
            count: count_birr_321(n)?.to_string(),
            expected: catalan(n - 1).to_string(),
        });
    }
    for n in 1..=max_n {
        for (j, count) in first_block_profile_321(n)?.into_iter().enumerate() {
            let j = j + 1;
            rows.push(CountRow {
                class: format!("first-block-{j}"),
                n,
                count: count.to_string(),
                expected: (catalan(j - 1) * catalan(n - j)).to_string(),
            });
        }
    }
    Ok(rows)
}

/// `C(n, k)` by the multiplicative formula, independent of the Catalan
/// cache.
fn binomial_big(n: u64, k: u64) -> BigUint {
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalanIdentities {
    pub max_n: usize,
    /// First `n` where `C_n ≠ Σ C_{j-1} C_{n-j}`, if any.
    pub recurrence_failure: Option<usize>,
    /// First `n` where `C_n ≠ binom(2n, n) / (n + 1)`, if any.
    pub binomial_failure: Option<usize>,
    /// First `n` where the split weights do not sum to exactly 1, if any.
    pub split_sum_failure: Option<usize>,
}

impl CatalanIdentities {
    pub fn passed(&self) -> bool {
        self.recurrence_failure.is_none() && self.binomial_failure.is_none() && self.split_sum_failure.is_none()
    }
}

pub fn catalan_identities(max_n: usize) -> Result<CatalanIdentities> {
    let c = CatalanTable::shared().prefix(max_n);
    let recurrence_failure = (1..=max_n).find(|&n| {
        let sum: BigUint = (1..=n).map(|j| &c[j - 1] * &c[n - j]).sum();
        sum != c[n]
    });
    let binomial_failure = (0..=max_n).find(|&n| {
        let b = binomial_big(2 * n as u64, n as u64);
        b.clone() % (n as u64 + 1) != BigUint::zero() || b / (n as u64 + 1) != c[n]
    });
    let mut split_sum_failure = None;
    for n in 1..=max_n {
        if !split_weights(n)?.total().is_one() {
            split_sum_failure = Some(n);
            break;
        }
    }
    Ok(CatalanIdentities { max_n, recurrence_failure, binomial_failure, split_sum_failure })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NuGapRow {
    pub n: usize,
    pub j: usize,
    /// Exact `|ν_n(j) - ν(j)|`, rounded to double only at the end.
    pub gap: f64,
}

/// `|ν_n(j) - ν(j)|` for `j = 1..=jmax` at each `n`, in exact arithmetic.
pub fn nu_gaps(ns: &[usize], jmax: usize) -> Result<Vec<NuGapRow>> {
    require("jmax", 1, jmax as u64)?;
    let mut rows = Vec::new();
    for &n in ns {
        require("n", 1, n as u64)?;
        let total = catalan(n);
        for j in 1..=jmax {
            let finite = if j <= n {
                BigRational::new((catalan(j - 1) * catalan(n - j)).into(), total.clone().into())
            } else {
                BigRational::zero()
            };
            let diff = finite - nu_limit(j);
            let gap = if diff < BigRational::zero() { -diff } else { diff };
            rows.push(NuGapRow { n, j, gap: ratio_to_f64(&gap) });
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XSamplerCheck {
    pub draws: u64,
    /// `(k, observed frequency, exact P(X = k), |z|)` for `k = 0..=5`.
    pub point_checks: Vec<(u64, f64, f64, f64)>,
    /// TV between the random-walk and inversion samplers over
    /// `{0..=cap, > cap}`.
    pub cap: u64,
    pub tv_walk_vs_inversion: f64,
}

/// Checks the random-walk `X` sampler against the exact pmf and against
/// the exact-CDF inversion sampler.
pub fn x_sampler_check(draws: u64, cap: u64, base: &RngStream) -> Result<XSamplerCheck> {
    require("draws", 1, draws)?;
    let buckets = cap as usize + 2;
    let merge = |mut a: Vec<u64>, b: Vec<u64>| {
        a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
        a
    };
    let bucket = |x: Option<u64>| x.filter(|&v| v <= cap).map_or(cap as usize + 1, |v| v as usize);
    let walk = fold_trials(&base.child(0), draws, || vec![0u64; buckets], |h, rng| h[bucket(Some(sample_x(rng)))] += 1, merge);
    let inversion = XInversion::new(cap);
    let inv = fold_trials(&base.child(1), draws, || vec![0u64; buckets], |h, rng| h[bucket(inversion.sample(rng))] += 1, merge);
    let freq = |h: &[u64]| h.iter().map(|&c| c as f64 / draws as f64).collect::<Vec<_>>();
    let (fw, fi) = (freq(&walk), freq(&inv));
    let point_checks = (0..=5u64.min(cap))
        .map(|k| {
            let p = x_pmf(k);
            let se = (p * (1.0 - p) / draws as f64).sqrt();
            (k, fw[k as usize], p, (fw[k as usize] - p).abs() / se)
        })
        .collect();
    Ok(XSamplerCheck { draws, point_checks, cap, tv_walk_vs_inversion: tv_of_vectors(&fw, &fi) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunLengthCheck {
    pub runs: u64,
    pub cap: u64,
    pub observed: Vec<f64>,
    pub expected: Vec<f64>,
    pub tv: f64,
}

fn x_law_buckets(cap: u64, shift: u64) -> Vec<f64> {
    let mut out: Vec<f64> = (0..=cap).map(|k| if k >= shift { x_pmf(k - shift) } else { 0.0 }).collect();
    let head: f64 = out.iter().sum();
    out.push(1.0 - head);
    out
}

/// Lengths of the ∞-runs in 213 limit prefixes against the law of `X`,
/// over `{0..=cap, > cap}`. Every run segment of every prefix counts, so
/// the number of runs exceeds `prefixes`.
pub fn run_length_check_213(prefixes: u64, prefix_len: usize, cap: u64, base: &RngStream) -> Result<RunLengthCheck> {
    require("prefixes", 1, prefixes)?;
    let buckets = cap as usize + 2;
    let counts = fold_trials(
        base,
        prefixes,
        || vec![0u64; buckets],
        |h, rng| {
            for seg in limit_prefix_213(prefix_len, rng).trace.segments {
                if seg.kind == SegmentKind::InfinityRun {
                    h[if seg.len <= cap { seg.len as usize } else { cap as usize + 1 }] += 1;
                }
            }
        },
        |mut a, b| {
            a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
            a
        },
    );
    let runs: u64 = counts.iter().sum();
    let observed: Vec<f64> = counts.iter().map(|&c| c as f64 / runs as f64).collect();
    let expected = x_law_buckets(cap, 0);
    let tv = tv_of_vectors(&observed, &expected);
    Ok(RunLengthCheck { runs, cap, observed, expected, tv })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Partial321Check {
    pub prefixes: u64,
    pub blocks: u64,
    pub materialized_blocks: u64,
    /// Materialised blocks that were reducible or contained 321.
    pub bad_blocks: u64,
    /// Prefixes with `Y = 1` that were not empty or lacked a tail marker.
    pub bad_empty: u64,
    pub empty_prefixes: u64,
    /// Block-length law over `{1..=cap, > cap}` against `X̂`.
    pub cap: u64,
    pub observed: Vec<f64>,
    pub expected: Vec<f64>,
    pub tv: f64,
}

impl Partial321Check {
    pub fn passed(&self, tv_tolerance: f64) -> bool {
        self.bad_blocks == 0 && self.bad_empty == 0 && self.tv <= tv_tolerance
    }
}

/// Structural and distributional checks of the partial 321 limit over
/// `prefixes` independent draws.
pub fn partial_321_check(prefixes: u64, cap: u64, base: &RngStream, options: &LimitOptions) -> Result<Partial321Check> {
    require("prefixes", 1, prefixes)?;
    #[derive(Clone)]
    struct Acc {
        lengths: Vec<u64>,
        materialized: u64,
        bad_blocks: u64,
        bad_empty: u64,
        empty: u64,
    }
    let acc = fold_trials(
        base,
        prefixes,
        || Acc { lengths: vec![0; cap as usize + 1], materialized: 0, bad_blocks: 0, bad_empty: 0, empty: 0 },
        |acc, rng| {
            let prefix = limit_prefix_321_partial_with(None, rng, options);
            let blocks: Vec<_> = prefix.trace.segments.iter().filter(|s| s.kind == SegmentKind::BirrBlock).collect();
            let tail_ok = prefix.trace.segments.last().is_some_and(|s| s.kind == SegmentKind::TailMarker);
            if blocks.is_empty() {
                acc.empty += 1;
                if !prefix.is_empty() || !tail_ok {
                    acc.bad_empty += 1;
                }
            }
            for seg in blocks {
                acc.lengths[if seg.len <= cap { seg.len as usize - 1 } else { cap as usize }] += 1;
                if seg.emitted == 0 {
                    continue;
                }
                acc.materialized += 1;
                let values: Vec<u64> = prefix.segment_entries(seg).iter().filter_map(|e| e.finite()).collect();
                let (lo, _) = seg.block.expect("block segments carry their block");
                let ok = seg.emitted == seg.len
                    && Permutation::new(lo, values)
                        .map(|p| p.avoids(Pattern::P321) && p.is_block_irreducible().unwrap_or(false))
                        .unwrap_or(false);
                acc.bad_blocks += u64::from(!ok);
            }
        },
        |mut a, b| {
            a.lengths.iter_mut().zip(&b.lengths).for_each(|(x, y)| *x += y);
            a.materialized += b.materialized;
            a.bad_blocks += b.bad_blocks;
            a.bad_empty += b.bad_empty;
            a.empty += b.empty;
            a
        },
    );
    let blocks: u64 = acc.lengths.iter().sum();
    let observed: Vec<f64> = acc.lengths.iter().map(|&c| c as f64 / blocks.max(1) as f64).collect();
    // X̂ = X + 1 on 1..=cap; drop the impossible value 0
    let expected = x_law_buckets(cap, 1)[1..].to_vec();
    let tv = tv_of_vectors(&observed, &expected);
    Ok(Partial321Check {
        prefixes,
        blocks,
        materialized_blocks: acc.materialized,
        bad_blocks: acc.bad_blocks,
        bad_empty: acc.bad_empty,
        empty_prefixes: acc.empty,
        cap,
        observed,
        expected,
        tv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_coordinate_examples() {
        let d = exact_coordinate_pmf(Pattern::P312, 3, 1, 3).unwrap();
        assert!((d.mass_of(1) - 0.4).abs() < 1e-15);
        for pattern in Pattern::ALL {
            let d = exact_coordinate_pmf(pattern, 1, 1, 1).unwrap();
            assert_eq!(d.mass_of(1), 1.0);
        }
        assert!(matches!(exact_coordinate_pmf(Pattern::P312, 3, 4, 3), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn monte_carlo_coordinate_matches_enumeration() {
        let exact = exact_coordinate_pmf(Pattern::P231, 6, 2, 6).unwrap();
        let mc = empirical_coordinate_pmf(Pattern::P231, 6, 2, 6, 100_000, &RngStream::new(4, 0)).unwrap();
        for (m, (e, se)) in mc.masses().iter().zip(exact.masses().iter().zip(mc.standard_errors())) {
            assert!((m - e).abs() <= 4.0 * se.max(1e-9), "{m} vs {e}");
        }
    }

    #[test]
    fn positional_exact_is_zero() {
        for pattern in [Pattern::P312, Pattern::P213, Pattern::P231, Pattern::P132] {
            for n in 1..=7 {
                let law = check_positional_law_exact(n, pattern).unwrap();
                assert_eq!(law.max_abs_error, 0.0);
            }
        }
        let law = check_positional_law_exact(3, Pattern::P312).unwrap();
        assert_eq!(law.observed, vec![0.4, 0.2, 0.4]);
        assert!(check_positional_law_exact(3, Pattern::P321).is_err());
    }

    #[test]
    fn positional_monte_carlo() {
        let law = check_positional_law_mc(20, Pattern::P132, 50_000, &RngStream::new(1, 0)).unwrap();
        assert!(law.max_z < 4.5, "{}", law.max_z);
    }

    #[test]
    fn first_entry_recursion_matches_enumeration_for_both_patterns() {
        for n in 1..=8 {
            for l in 1..=n {
                let counts = first_entry_counts(n, l);
                for pattern in [Pattern::P132, Pattern::P123] {
                    let mut direct = vec![0u64; l];
                    for s in enumerate_avoiders(n, pattern).unwrap() {
                        let v = s.values()[0] as usize;
                        if v <= l {
                            direct[v - 1] += 1;
                        }
                    }
                    let direct: Vec<BigUint> = direct.into_iter().map(BigUint::from).collect();
                    assert_eq!(counts, direct, "n={n} l={l} {pattern}");
                }
            }
        }
    }

    #[test]
    fn escape_scan_small_cases() {
        let base = RngStream::new(0, 0);
        let rows = escape_scan(Pattern::P123, 1, 3, &[6], 1, &base).unwrap();
        let hits = enumerate_avoiders(6, Pattern::P123).unwrap().filter(|s| s.values()[0] <= 3).count();
        assert_eq!(rows[0].exact, Some(hits as f64 / 132.0));
        let rows = escape_scan(Pattern::P132, 3, 3, &[3], 1, &base).unwrap();
        assert_eq!(rows[0].estimate, 1.0);
        assert!(escape_scan(Pattern::P312, 1, 3, &[5], 1, &base).is_err());
        assert!(escape_scan(Pattern::P132, 4, 3, &[3], 1, &base).is_err());
    }

    #[test]
    fn escape_exact_values_decrease() {
        let rows = escape_scan(Pattern::P132, 1, 3, &[50, 200, 800], 100, &RngStream::new(0, 0)).unwrap();
        let logs: Vec<f64> = rows.iter().map(|r| r.exact_log10.unwrap()).collect();
        assert!(logs.windows(2).all(|w| w[1] < w[0]), "{logs:?}");
    }

    #[test]
    fn stable_reference_values() {
        assert_eq!(stable_reference(0.0), Complex64::new(1.0, 0.0));
        let r = stable_reference(1.0);
        assert!((r.re - 0.3749).abs() < 1e-4 && (r.im + 0.3203).abs() < 1e-4, "{r}");
        assert_eq!(stable_reference(-2.0), stable_reference(2.0).conj());
        let pts = stable_cf_check(10, 200, &[0.0, 1.0], &RngStream::new(0, 0)).unwrap();
        assert!((pts[0].empirical - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(pts.iter().all(|p| p.empirical.norm() <= 1.0 + 1e-12));
    }

    #[test]
    fn catalan_identity_check() {
        assert!(catalan_identities(60).unwrap().passed());
    }

    #[test]
    fn nu_gap_examples() {
        let rows = nu_gaps(&[3], 3).unwrap();
        let gaps: Vec<f64> = rows.iter().map(|r| r.gap).collect();
        // 2/5 - 1/4, 1/5 - 1/16, 2/5 - 1/32
        assert_eq!(gaps, vec![0.15, 0.1375, 0.36875]);
    }

    #[test]
    fn counts_small() {
        assert!(count_check(5).unwrap().iter().all(CountRow::matches));
    }

    #[test]
    fn uniformity_small() {
        let r = check_uniformity(Pattern::P213, 4, 20_000, 0.999, &RngStream::new(2, 0)).unwrap();
        assert_eq!(r.classes, 14);
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn convergence_self_consistency() {
        let r = convergence_report(Pattern::P231, &[1], 10, &[50], 5_000, &RngStream::new(3, 0), &LimitOptions::default())
            .unwrap();
        assert!(r.limit[0].above_cap() + r.limit[0].infinity() >= 0.5 - 4.0 * (0.25f64 / 5000.0).sqrt());
        assert!(convergence_report(Pattern::P123, &[1], 10, &[50], 10, &RngStream::new(3, 0), &LimitOptions::default())
            .is_err());
    }
}
