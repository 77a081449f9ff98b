//! Reference implementations used only by tests. Each one is the most direct
//! reading of its definition and shares no code with the library.
#![allow(dead_code)]

use std::collections::HashSet;

/// `sum p ln(p/q)` term by term, skipping `p = 0`.
pub fn kl_direct(p: &[f64], q: &[f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..p.len() {
        if p[i] > 0.0 {
            total += p[i] * (p[i] / q[i]).ln();
        }
    }
    total
}

/// `(c + 1) / (n + |C|)` per category.
pub fn smooth_direct(counts: &[u64]) -> Vec<f64> {
    let n: u64 = counts.iter().sum();
    let denom = (n + counts.len() as u64) as f64;
    counts.iter().map(|&c| (c + 1) as f64 / denom).collect()
}

/// Walks the first R positions and counts relevant ones.
pub fn r_precision_brute(ranked: &[String], relevant: &HashSet<String>) -> f64 {
    let r = relevant.len();
    let mut hits = 0usize;
    for i in 0..r {
        if i < ranked.len() && relevant.contains(&ranked[i]) {
            hits += 1;
        }
    }
    hits as f64 / r as f64
}

/// Tau-b by enumerating all pairs. `None` when a side is constant.
pub fn tau_b_brute(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    let (mut concordant, mut discordant) = (0i64, 0i64);
    let (mut tie_x, mut tie_y) = (0u64, 0u64);
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 {
                tie_x += 1;
            }
            if dy == 0.0 {
                tie_y += 1;
            }
            if dx * dy > 0.0 {
                concordant += 1;
            } else if dx * dy < 0.0 {
                discordant += 1;
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as u64;
    if n0 == tie_x || n0 == tie_y {
        return None;
    }
    let denominator = ((n0 - tie_x) as f64 * (n0 - tie_y) as f64).sqrt();
    Some((concordant - discordant) as f64 / denominator)
}

/// Every permutation of `0..n` (Heap's algorithm).
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn heap(k: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(a.clone());
            return;
        }
        heap(k - 1, a, out);
        for i in 0..k - 1 {
            if k.is_multiple_of(2) {
                a.swap(i, k - 1);
            } else {
                a.swap(0, k - 1);
            }
            heap(k - 1, a, out);
        }
    }
    let mut a: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    heap(n, &mut a, &mut out);
    out
}
