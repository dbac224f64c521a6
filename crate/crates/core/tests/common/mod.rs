//! Independent reference implementations used by the integration tests.
//! Nothing here calls the library's state algebra or solver.

#![allow(dead_code)]

use num_rational::BigRational;
use num_traits::{One, Zero};

pub fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

pub fn phi_of(counts: &[u32]) -> u64 {
    let b = counts.len() as u64 - 1;
    counts
        .iter()
        .enumerate()
        .map(|(i, &k)| k as u64 * (b - i as u64 + 1))
        .sum()
}

/// Every nonzero state with `b + 1` levels and phi at most `cap`.
pub fn states_with_phi_at_most(b: usize, cap: u64) -> Vec<Vec<u32>> {
    fn go(level: usize, b: usize, left: u64, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if level > b {
            if cur.iter().any(|&k| k > 0) {
                out.push(cur.clone());
            }
            return;
        }
        let w = (b - level + 1) as u64;
        for k in 0..=(left / w) {
            cur.push(k as u32);
            go(level + 1, b, left - k * w, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, b, cap, &mut Vec::new(), &mut out);
    out
}

/// All ways to write `total` as an ordered sum of `parts` naturals.
pub fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Every decomposition over all `d` choices, as `parts[choice][level]`.
pub fn all_decompositions(counts: &[u32], d: usize) -> Vec<Vec<Vec<u32>>> {
    let mut decs = vec![vec![vec![0u32; counts.len()]; d]];
    for (level, &k) in counts.iter().enumerate() {
        let mut next = Vec::new();
        for dec in &decs {
            for comp in compositions(k, d) {
                let mut dec = dec.clone();
                for (j, &v) in comp.iter().enumerate() {
                    dec[j][level] = v;
                }
                next.push(dec);
            }
        }
        decs = next;
    }
    decs
}

/// Counts after choice `j` turns out correct.
pub fn successor_of(counts: &[u32], parts: &[Vec<u32>], j: usize) -> Vec<u32> {
    (0..counts.len())
        .map(|i| {
            let stay = parts[j][i];
            let promoted: u32 = if i == 0 {
                0
            } else {
                (0..parts.len()).filter(|&v| v != j).map(|v| parts[v][i - 1]).sum()
            };
            stay + promoted
        })
        .collect()
}

pub fn is_absorbing(counts: &[u32]) -> bool {
    let (last, rest) = counts.split_last().unwrap();
    *last == 1 && rest.iter().all(|&k| k == 0)
}

/// Plain expectimax over every decomposition of `counts` across all `d`
/// choices and every subset `A` with at least two choices, without any
/// memoisation. The correct choice is uniform over `A`; a move that would
/// leave no expert on some choice in `A` is illegal.
pub fn oracle_loss(counts: &[u32], d: usize) -> BigRational {
    if is_absorbing(counts) {
        return BigRational::zero();
    }
    let mut best: Option<BigRational> = None;
    for parts in all_decompositions(counts, d) {
        let succ: Vec<Vec<u32>> = (0..d).map(|j| successor_of(counts, &parts, j)).collect();
        for mask in 1u32..(1 << d) {
            let members: Vec<usize> = (0..d).filter(|j| mask & (1 << j) != 0).collect();
            let a = members.len();
            if a < 2 || members.iter().any(|&j| succ[j].iter().all(|&k| k == 0)) {
                continue;
            }
            let mut sum = BigRational::zero();
            let mut looped = false;
            for &j in &members {
                if succ[j] == counts {
                    looped = true;
                } else {
                    sum += oracle_loss(&succ[j], d);
                }
            }
            let v = if looped {
                BigRational::one() + sum / BigRational::from_integer((a as i64 - 1).into())
            } else {
                q(a as i64 - 1, a as i64) + sum / BigRational::from_integer((a as i64).into())
            };
            if best.as_ref().is_none_or(|b| v > *b) {
                best = Some(v);
            }
        }
    }
    best.expect("every non-absorbing state has a legal move")
}

/// `0.5 * (k - 1 + n / 2^k)` with `2^k <= n < 2^(k+1)`.
pub fn halving_formula(n: u64) -> BigRational {
    let k = 63 - n.leading_zeros() as i64;
    (BigRational::from_integer((k - 1).into()) + q(n as i64, 1i64 << k)) / q(2, 1)
}

pub fn binom(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}
