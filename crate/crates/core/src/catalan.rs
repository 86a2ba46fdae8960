//! Exact Catalan numbers and the positional split law built from them.

use std::sync::{OnceLock, RwLock};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::RngCore;

use crate::error::{Error, Result};
use crate::rng::random_biguint_below;

/// Append-only cache of `C_0, C_1, ...`.
///
/// Reads take a shared lock; a miss takes the write lock and extends the
/// table with `C_k = C_{k-1} (4k - 2) / (k + 1)`, which divides exactly.
#[derive(Debug)]
pub struct CatalanTable {
    values: RwLock<Vec<BigUint>>,
}

impl Default for CatalanTable {
    fn default() -> Self {
        Self::new()
    }
}

impl CatalanTable {
    pub fn new() -> Self {
        Self { values: RwLock::new(vec![BigUint::one()]) }
    }

    /// The process-wide table used by [`catalan`].
    pub fn shared() -> &'static CatalanTable {
        static TABLE: OnceLock<CatalanTable> = OnceLock::new();
        TABLE.get_or_init(CatalanTable::new)
    }

    pub fn len(&self) -> usize {
        self.values.read().expect("catalan cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Make sure `C_0..=C_n` are cached, e.g. before a parallel section.
    pub fn reserve_through(&self, n: usize) {
        if self.len() > n {
            return;
        }
        let mut values = self.values.write().expect("catalan cache poisoned");
        while values.len() <= n {
            let k = values.len() as u64;
            let next = values[values.len() - 1].clone() * (4 * k - 2) / (k + 1);
            values.push(next);
        }
    }

    pub fn get(&self, n: usize) -> BigUint {
        {
            let values = self.values.read().expect("catalan cache poisoned");
            if let Some(c) = values.get(n) {
                return c.clone();
            }
        }
        self.reserve_through(n);
        self.values.read().expect("catalan cache poisoned")[n].clone()
    }

    /// `C_0..=C_n` as one snapshot.
    pub fn prefix(&self, n: usize) -> Vec<BigUint> {
        self.reserve_through(n);
        self.values.read().expect("catalan cache poisoned")[..=n].to_vec()
    }
}

/// The n-th Catalan number, `binom(2n, n) / (n + 1)`.
pub fn catalan(n: usize) -> BigUint {
    CatalanTable::shared().get(n)
}

/// Law of the position of the split element in a block of size `n`:
/// `w_j = C_{j-1} C_{n-j} / C_n` for `j = 1..=n`.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitLaw {
    pub n: usize,
    pub weights: Vec<BigRational>,
}

impl SplitLaw {
    pub fn total(&self) -> BigRational {
        self.weights.iter().fold(BigRational::zero(), |acc, w| acc + w)
    }

    /// Weight of position `j` (1-based).
    pub fn weight(&self, j: usize) -> Option<&BigRational> {
        j.checked_sub(1).and_then(|i| self.weights.get(i))
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.weights.iter().map(ratio_to_f64).collect()
    }
}

/// Integer numerators `C_{j-1} C_{n-j}`, j = 1..=n; they sum to `C_n`.
fn split_numerators(n: usize) -> Vec<BigUint> {
    let c = CatalanTable::shared().prefix(n);
    (1..=n).map(|j| &c[j - 1] * &c[n - j]).collect()
}

pub fn split_weights(n: usize) -> Result<SplitLaw> {
    if n == 0 {
        return Err(Error::TooSmall { what: "block size n", min: 1, got: 0 });
    }
    let total = BigRational::from_integer(catalan(n).into());
    let weights = split_numerators(n)
        .into_iter()
        .map(|num| BigRational::from_integer(num.into()) / &total)
        .collect();
    Ok(SplitLaw { n, weights })
}

/// Draws `j` in `1..=n` with probability `C_{j-1} C_{n-j} / C_n`.
///
/// A single uniform integer `r` in `[0, C_n)` is located in the cumulative
/// integer numerators, so the law is exact.
pub fn sample_split_position<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> Result<usize> {
    if n == 0 {
        return Err(Error::TooSmall { what: "block size n", min: 1, got: 0 });
    }
    if n == 1 {
        return Ok(1);
    }
    let r = random_biguint_below(&catalan(n), rng);
    let mut acc = BigUint::zero();
    for (i, num) in split_numerators(n).into_iter().enumerate() {
        acc += num;
        if r < acc {
            return Ok(i + 1);
        }
    }
    unreachable!("split numerators sum to C_n")
}

/// Exact `ν_n` on `1..=n` together with `ν` on `1..=cap` and `ν(∞)`.
#[derive(Clone, Debug, PartialEq)]
pub struct NuPmfs {
    pub n: usize,
    pub cap: usize,
    /// `ν_n(j)`, index `j - 1`.
    pub finite: Vec<BigRational>,
    /// `ν(j) = C_{j-1} / 4^j`, index `j - 1`.
    pub limit: Vec<BigRational>,
    /// `ν(∞) = 1/2`.
    pub limit_infinity: BigRational,
}

impl NuPmfs {
    /// `ν_n(j)`, zero outside `1..=n`.
    pub fn finite_at(&self, j: usize) -> BigRational {
        j.checked_sub(1)
            .and_then(|i| self.finite.get(i).cloned())
            .unwrap_or_else(BigRational::zero)
    }

    /// Exact `|ν_n(j) - ν(j)|` for `j ≤ cap`.
    pub fn abs_gap(&self, j: usize) -> BigRational {
        let limit = &self.limit[j - 1];
        let diff = self.finite_at(j) - limit;
        if diff < BigRational::zero() {
            -diff
        } else {
            diff
        }
    }
}

/// `ν(j) = C_{j-1} / 4^j`.
pub fn nu_limit(j: usize) -> BigRational {
    assert!(j >= 1);
    let denom = BigUint::one() << (2 * j);
    BigRational::new(catalan(j - 1).into(), denom.into())
}

pub fn nu_pmfs(n: usize, cap: usize) -> Result<NuPmfs> {
    if n == 0 {
        return Err(Error::TooSmall { what: "n", min: 1, got: 0 });
    }
    if cap == 0 {
        return Err(Error::TooSmall { what: "cap", min: 1, got: 0 });
    }
    let finite = split_weights(n)?.weights;
    let limit = (1..=cap).map(nu_limit).collect();
    Ok(NuPmfs {
        n,
        cap,
        finite,
        limit,
        limit_infinity: BigRational::new(1.into(), 2.into()),
    })
}

pub fn ratio_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

const LN_TABLE_LEN: usize = 1024;

/// `ln(C_m / 4^m)` in double precision.
///
/// Below 1024 it comes from a table built by the exact ratio recurrence;
/// above it uses `C_m / 4^m = (π m³)^{-1/2} (1 - 9/(8m) + 145/(128m²) -
/// 1155/(1024m³) + 36939/(32768m⁴) - ...)`, whose truncation error there
/// is below 1e-15 relative.
pub fn ln_catalan_over_4pow(m: u64) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut out = Vec::with_capacity(LN_TABLE_LEN);
        let mut ln = 0.0f64;
        out.push(ln);
        for k in 1..LN_TABLE_LEN as u64 {
            // C_k / 4^k = C_{k-1} / 4^{k-1} * (4k - 2) / (4 (k + 1))
            ln += ((4 * k - 2) as f64 / (4 * (k + 1)) as f64).ln();
            out.push(ln);
        }
        out
    });
    if (m as usize) < LN_TABLE_LEN {
        return table[m as usize];
    }
    let x = m as f64;
    let inv = 1.0 / x;
    let series = 1.0 - inv * (9.0 / 8.0 - inv * (145.0 / 128.0 - inv * (1155.0 / 1024.0 - inv * (36939.0 / 32768.0))));
    -1.5 * x.ln() - 0.5 * std::f64::consts::PI.ln() + series.ln()
}
