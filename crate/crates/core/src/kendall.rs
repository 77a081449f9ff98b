//! Kendall's tau-b between system orderings.
//!
//! Uses Knight's O(n log n) algorithm: sort by the first score, count
//! inversions of the second score with a merge sort, and correct for ties.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};

/// Tau-b of two paired score vectors.
///
/// `(C - D) / sqrt((n0 - n1) (n0 - n2))` with `n0 = n(n-1)/2`, `n1` the pairs
/// tied on `x` and `n2` the pairs tied on `y`.
pub fn tau_b(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::TagMismatch);
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::TooFewItems(n));
    }
    if let Some(&bad) = x.iter().chain(y).find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(bad));
    }

    // `+ 0.0` folds -0.0 into 0.0 so total_cmp agrees with `==` on ties.
    let mut pairs: Vec<(f64, f64)> = x.iter().zip(y).map(|(a, b)| (a + 0.0, b + 0.0)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let n0 = (n * (n - 1) / 2) as u64;
    let n1 = tied_pairs(&pairs, |a, b| a.0 == b.0);
    let n3 = tied_pairs(&pairs, |a, b| a == b);

    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut buf = ys.clone();
    let swaps = merge_count(&mut ys, &mut buf);

    let n2 = tied_pairs(&ys, |a, b| a == b);

    if n0 == n1 || n0 == n2 {
        return Err(Error::ConstantRanking);
    }
    let numerator = n0 as i64 - n1 as i64 - n2 as i64 + n3 as i64 - 2 * swaps as i64;
    let denominator = libm::sqrt((n0 - n1) as f64 * (n0 - n2) as f64);
    Ok(numerator as f64 / denominator)
}

/// Tau-b between two scorings of the same systems, matched by tag.
pub fn kendall_tau<S: AsRef<str>>(a: &[(S, f64)], b: &[(S, f64)]) -> Result<f64> {
    let index_b = tag_index(b.iter().map(|(t, _)| t.as_ref()))?;
    let index_a = tag_index(a.iter().map(|(t, _)| t.as_ref()))?;
    if index_a.len() != index_b.len() || index_a.keys().any(|k| !index_b.contains_key(k)) {
        return Err(Error::TagMismatch);
    }
    let mut xs = Vec::with_capacity(a.len());
    let mut ys = Vec::with_capacity(a.len());
    for (tag, score) in a {
        xs.push(*score);
        ys.push(b[index_b[tag.as_ref()]].1);
    }
    tau_b(&xs, &ys)
}

/// Tau between two strict orderings of the same tags, best first.
pub fn kendall_tau_orderings<S: AsRef<str>>(a: &[S], b: &[S]) -> Result<f64> {
    fn scored<S: AsRef<str>>(order: &[S]) -> Vec<(&str, f64)> {
        order
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_ref(), -(i as f64)))
            .collect()
    }
    kendall_tau(&scored(a), &scored(b))
}

fn tag_index<'a>(tags: impl Iterator<Item = &'a str>) -> Result<BTreeMap<&'a str, usize>> {
    let mut index = BTreeMap::new();
    for (i, tag) in tags.enumerate() {
        if index.insert(tag, i).is_some() {
            return Err(Error::DuplicateTag(tag.into()));
        }
    }
    Ok(index)
}

fn tied_pairs<T>(sorted: &[T], same: impl Fn(&T, &T) -> bool) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if same(&w[0], &w[1]) {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Sorts `v` ascending and returns the number of strict inversions.
fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = {
        let (left, right) = v.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        merge_count(left, bl) + merge_count(right, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j].total_cmp(&v[i]) == Ordering::Less {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn orderings() {
        let a = ["s1", "s2", "s3", "s4"];
        assert_eq!(kendall_tau_orderings(&a, &a).unwrap(), 1.0);
        let rev = ["s4", "s3", "s2", "s1"];
        assert_eq!(kendall_tau_orderings(&a, &rev).unwrap(), -1.0);
        let swapped = ["s1", "s3", "s2", "s4"];
        assert_abs_diff_eq!(
            kendall_tau_orderings(&a, &swapped).unwrap(),
            4.0 / 6.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn matched_by_tag_not_position() {
        let a = [("x", 1.0), ("y", 2.0), ("z", 3.0)];
        let b = [("z", 30.0), ("x", 10.0), ("y", 20.0)];
        assert_eq!(kendall_tau(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn tied_scores() {
        // x: 1 1 2 3, y: 1 2 2 3 -> C = 4, D = 0, n1 = 1, n2 = 1
        let t = tau_b(&[1.0, 1.0, 2.0, 3.0], &[1.0, 2.0, 2.0, 3.0]).unwrap();
        assert_abs_diff_eq!(t, 4.0 / 5.0, epsilon = 1e-15);
    }

    #[test]
    fn errors() {
        assert_eq!(
            kendall_tau_orderings(&["a", "b"], &["a", "c"]).unwrap_err(),
            Error::TagMismatch
        );
        assert_eq!(
            kendall_tau_orderings(&["a", "a"], &["a", "b"]).unwrap_err(),
            Error::DuplicateTag("a".into())
        );
        assert_eq!(tau_b(&[1.0], &[1.0]).unwrap_err(), Error::TooFewItems(1));
        assert_eq!(
            tau_b(&[1.0, 1.0], &[1.0, 2.0]).unwrap_err(),
            Error::ConstantRanking
        );
    }
}
