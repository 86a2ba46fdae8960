//! Brute-force reference implementations.
//!
//! These are deliberately naive and share no code with the fast paths they
//! check. They are public so integration tests and the verification
//! harness can use them.

use crate::perm::Pattern;

/// Cubic scan over all index triples.
pub fn contains_naive<T: Copy + Ord>(values: &[T], pattern: Pattern) -> bool {
    let [a, b, c] = pattern.digits();
    let n = values.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let triple = [values[i], values[j], values[k]];
                let order = |x: usize, y: usize| triple[x] < triple[y];
                let want = |x: u8, y: u8| x < y;
                if order(0, 1) == want(a, b) && order(0, 2) == want(a, c) && order(1, 2) == want(b, c) {
                    return true;
                }
            }
        }
    }
    false
}

/// Exact binomial coefficient in u128, for small arguments.
pub fn binomial_u128(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    acc
}

/// `binom(2n, n) / (n + 1)` straight from the binomial formula (n ≤ 60).
pub fn catalan_by_binomial(n: u64) -> u128 {
    binomial_u128(2 * n, n) / u128::from(n + 1)
}
