//! Reduced-word arithmetic in free groups.
//!
//! Letters are nonzero `i32`: `k > 0` is the k-th generator, `-k` its inverse.

use std::cmp::Ordering;

/// Sort key of a letter: `a < A < b < B < …`.
pub fn letter_key(l: i32) -> u32 {
    let k = l.unsigned_abs() - 1;
    2 * k + u32::from(l < 0)
}

/// Shortlex comparison of two words under [`letter_key`].
pub fn shortlex_cmp(a: &[i32], b: &[i32]) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| {
        a.iter()
            .map(|l| letter_key(*l))
            .cmp(b.iter().map(|l| letter_key(*l)))
    })
}

pub fn is_reduced(w: &[i32]) -> bool {
    w.windows(2).all(|p| p[0] != -p[1]) && w.iter().all(|l| *l != 0)
}

/// Free reduction with a stack.
pub fn reduce(w: &[i32]) -> Vec<i32> {
    let mut out: Vec<i32> = Vec::with_capacity(w.len());
    for &l in w {
        if l == 0 {
            continue;
        }
        if out.last() == Some(&-l) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

pub fn inverse(w: &[i32]) -> Vec<i32> {
    w.iter().rev().map(|l| -l).collect()
}

pub fn multiply(a: &[i32], b: &[i32]) -> Vec<i32> {
    let mut out = a.to_vec();
    for &l in b {
        if out.last() == Some(&-l) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

pub fn power(w: &[i32], k: i64) -> Vec<i32> {
    let base = if k < 0 { inverse(w) } else { w.to_vec() };
    let mut out = Vec::new();
    for _ in 0..k.unsigned_abs() {
        out = multiply(&out, &base);
    }
    out
}

/// Splits a reduced word as `u · c · u⁻¹` with `c` cyclically reduced.
pub fn cyclic_reduction(w: &[i32]) -> (Vec<i32>, Vec<i32>) {
    let mut lo = 0;
    let mut hi = w.len();
    while hi - lo >= 2 && w[lo] == -w[hi - 1] {
        lo += 1;
        hi -= 1;
    }
    (w[..lo].to_vec(), w[lo..hi].to_vec())
}

/// Smallest period `p` dividing `|c|` with `c = (c[..p])^{|c|/p}`.
pub fn minimal_period(c: &[i32]) -> usize {
    let n = c.len();
    (1..=n)
        .filter(|p| n % p == 0)
        .find(|&p| (p..n).all(|i| c[i] == c[i - p]))
        .unwrap_or(n)
}

/// `w = root^exponent` with `root` not a proper power. `w` must be a nonempty
/// reduced word.
pub fn primitive_root_word(w: &[i32]) -> (Vec<i32>, usize) {
    let (u, c) = cyclic_reduction(w);
    let p = minimal_period(&c);
    let exponent = c.len() / p;
    let mut root = u.clone();
    root.extend_from_slice(&c[..p]);
    root.extend(inverse(&u));
    (root, exponent)
}
