//! Uniform Dyck paths and the bijections used by the samplers.

use rand::{Rng, RngCore};

/// A Dyck path of semilength `n`: `true` is an up step.
pub type DyckPath = Vec<bool>;

/// Uniform Dyck path of semilength `n` via the cycle lemma.
///
/// A uniformly random arrangement of `n` ups and `n + 1` downs has exactly
/// one rotation whose partial sums stay non-negative until the final step;
/// it starts right after the first global minimum. Dropping that final
/// down step leaves a uniform Dyck path, since each path arises from
/// exactly `2n + 1` arrangements.
pub fn sample_dyck_path<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> DyckPath {
    let total = 2 * n + 1;
    let mut steps = Vec::with_capacity(total);
    let (mut ups, mut downs) = (n as u64, n as u64 + 1);
    while ups + downs > 0 {
        let up = rng.random_range(0..ups + downs) < ups;
        if up {
            ups -= 1;
        } else {
            downs -= 1;
        }
        steps.push(up);
    }

    let mut height = 0i64;
    let mut min = 0i64;
    let mut cut = 0usize;
    for (i, &up) in steps.iter().enumerate() {
        height += if up { 1 } else { -1 };
        if height < min {
            min = height;
            cut = i + 1;
        }
    }
    steps.rotate_left(cut % total);
    let last = steps.pop();
    debug_assert_eq!(last, Some(false));
    steps
}

pub fn is_dyck_path(path: &[bool]) -> bool {
    let mut height = 0i64;
    for &up in path {
        height += if up { 1 } else { -1 };
        if height < 0 {
            return false;
        }
    }
    height == 0
}

/// `partner[i]` is the index of the step matched with step `i`.
pub fn matching(path: &[bool]) -> Vec<usize> {
    let mut partner = vec![0usize; path.len()];
    let mut open = Vec::new();
    for (i, &up) in path.iter().enumerate() {
        if up {
            open.push(i);
        } else {
            let j = open.pop().expect("unbalanced path");
            partner[i] = j;
            partner[j] = i;
        }
    }
    partner
}

/// The 321-avoiding permutation of `[1, n]` whose left-to-right maxima are
/// read off the path: each maximal run of ups ending after `u` ups in
/// total, preceded by `d` downs, is a maximum of value `u` at position
/// `d + 1`. The remaining positions take the remaining values in
/// increasing order.
pub fn decode_321(path: &[bool]) -> Vec<u64> {
    let n = path.len() / 2;
    let mut out = vec![0u64; n];
    let mut used = vec![false; n + 1];
    let (mut ups, mut downs) = (0usize, 0usize);
    for (i, &up) in path.iter().enumerate() {
        if up {
            ups += 1;
            let run_ends = path.get(i + 1).is_none_or(|&next| !next);
            if run_ends {
                out[downs] = ups as u64;
                used[ups] = true;
            }
        } else {
            downs += 1;
        }
    }
    let mut next_free = 1usize;
    for slot in out.iter_mut().filter(|v| **v == 0) {
        while used[next_free] {
            next_free += 1;
        }
        *slot = next_free as u64;
        next_free += 1;
    }
    out
}
