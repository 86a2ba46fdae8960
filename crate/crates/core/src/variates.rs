//! The scalar random variables of the regenerative constructions.
//!
//! - `X` with `P(X = n) = C_n / (2·4^n)`, n ≥ 0 (heavy tailed: `E X^p < ∞`
//!   only for `p < 1/2`).
//! - `Y` geometric on `{1, 2, ...}` with `P(Y = n) = 2^{-n}`.
//! - `X̂ = X + 1`, and a fair bit `χ`.
//!
//! `X` is sampled from the first return time `τ` of a simple symmetric
//! random walk: `P(τ = 2j) = 2 C_{j-1} 4^{-j}`, so `τ/2 - 1` has exactly the
//! law of `X`. The walk is advanced in blocks: from height `h > 0` the next
//! `h` steps cannot reach zero before the last one, so the height after the
//! block is `2·Bin(h, 1/2)` and a return happens iff that is zero.

use num_bigint::BigUint;
use rand::{Rng, RngCore};
use rand_distr::{Binomial, Distribution};

use crate::catalan::catalan;
use crate::rng::random_biguint_bits;

/// Heights up to this are advanced by counting bits of raw words.
const POPCOUNT_LIMIT: u64 = 1024;

fn fair_binomial<R: RngCore + ?Sized>(trials: u64, rng: &mut R) -> u64 {
    if trials <= POPCOUNT_LIMIT {
        let mut left = trials;
        let mut ups = 0u64;
        while left >= 64 {
            ups += u64::from(rng.next_u64().count_ones());
            left -= 64;
        }
        if left > 0 {
            ups += u64::from((rng.next_u64() & ((1u64 << left) - 1)).count_ones());
        }
        ups
    } else {
        Binomial::new(trials, 0.5).expect("valid binomial").sample(rng)
    }
}

/// First return time to 0 of a simple symmetric walk started at 0, or
/// `None` once it is known to exceed `max_time`.
pub fn first_return_time<R: RngCore + ?Sized>(max_time: Option<u64>, rng: &mut R) -> Option<u64> {
    // By symmetry the first step goes up.
    let mut time: u64 = 1;
    let mut height: u64 = 1;
    loop {
        let end = time.saturating_add(height);
        if max_time.is_some_and(|m| end > m) {
            return None;
        }
        let ups = fair_binomial(height, rng);
        time = end;
        height = 2 * ups;
        if height == 0 {
            return Some(time);
        }
    }
}

pub fn sample_x<R: RngCore + ?Sized>(rng: &mut R) -> u64 {
    let tau = first_return_time(None, rng).expect("unbounded walk returns");
    tau / 2 - 1
}

/// `X` conditioned on nothing, but cut short: `None` means `X ≥ limit`.
/// Used where only small values matter, so the walk can be abandoned early.
pub fn sample_x_below<R: RngCore + ?Sized>(limit: u64, rng: &mut R) -> Option<u64> {
    if limit == 0 {
        return None;
    }
    first_return_time(Some(2 * limit), rng).map(|tau| tau / 2 - 1)
}

pub fn sample_hat_x<R: RngCore + ?Sized>(rng: &mut R) -> u64 {
    sample_x(rng) + 1
}

pub fn sample_y<R: RngCore + ?Sized>(rng: &mut R) -> u64 {
    let mut y = 1;
    loop {
        let word = rng.next_u64();
        if word != 0 {
            return y + u64::from(word.trailing_zeros());
        }
        y += 64;
    }
}

pub fn sample_chi<R: RngCore + ?Sized>(rng: &mut R) -> bool {
    rng.random::<bool>()
}

/// Exact `P(X = n) = C_n / (2·4^n)` as a double.
pub fn x_pmf(n: u64) -> f64 {
    0.5 * crate::catalan::ln_catalan_over_4pow(n).exp()
}

/// `P(X > n) = binom(2n+2, n+1) / 4^{n+1}`.
pub fn x_tail(n: u64) -> f64 {
    // binom(2k, k) / 4^k = (k + 1) C_k / 4^k
    let k = n + 1;
    (k as f64 + 1.0) * crate::catalan::ln_catalan_over_4pow(k).exp()
}

/// Inversion sampler for `X` truncated at a cap, used as an independent
/// cross-check of the random-walk sampler.
///
/// For `n ≤ cap`, `P(X ≤ n) = 1 - binom(2n+2, n+1) / 4^{n+1}` is a dyadic
/// rational with denominator dividing `4^{cap+1}`, so comparing one uniform
/// integer of `2·cap + 2` bits against the integer CDF numerators is exact.
#[derive(Clone, Debug)]
pub struct XInversion {
    cap: u64,
    /// `P(X ≤ n) · 4^{cap+1}` for `n = 0..=cap`.
    cdf_numerators: Vec<BigUint>,
}

impl XInversion {
    pub fn new(cap: u64) -> Self {
        let scale_bits = 2 * (cap + 1);
        let scale = BigUint::from(1u8) << scale_bits;
        let cdf_numerators = (0..=cap)
            .map(|n| {
                let k = (n + 1) as usize;
                // binom(2k, k) = (k + 1) C_k
                let central = catalan(k) * (k as u64 + 1);
                &scale - (central << (2 * (cap - n)))
            })
            .collect();
        Self { cap, cdf_numerators }
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    /// `Some(x)` for `x ≤ cap`, `None` when `X > cap`.
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> Option<u64> {
        let u = random_biguint_bits(2 * (self.cap + 1), rng);
        let idx = self.cdf_numerators.partition_point(|c| c <= &u);
        (idx <= self.cap as usize).then_some(idx as u64)
    }
}
