//! Independent reference implementations the library is checked against.
//! Each one is written from the definition, as directly as possible, and
//! shares no code with the crate.

#![allow(dead_code)]

use std::collections::BTreeMap;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Q = Ratio<i128>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- BLEU

fn count(haystack: &[&str], gram: &[&str]) -> u64 {
    if haystack.len() < gram.len() {
        return 0;
    }
    (0..=haystack.len() - gram.len())
        .filter(|&i| &haystack[i..i + gram.len()] == gram)
        .count() as u64
}

/// Sufficient statistics for whitespace-tokenized text: (sys_len, ref_len,
/// clipped matches per order, candidate n-grams per order).
pub fn bleu_stats_oracle(pairs: &[(&str, &str)]) -> (u64, u64, [u64; 4], [u64; 4]) {
    let (mut sys, mut refl) = (0, 0);
    let mut correct = [0u64; 4];
    let mut total = [0u64; 4];
    for (cand, reference) in pairs {
        let c: Vec<&str> = cand.split_whitespace().collect();
        let r: Vec<&str> = reference.split_whitespace().collect();
        sys += c.len() as u64;
        refl += r.len() as u64;
        for n in 1..=4 {
            if c.len() < n {
                continue;
            }
            total[n - 1] += (c.len() - n + 1) as u64;
            let mut seen: Vec<&[&str]> = Vec::new();
            for i in 0..=c.len() - n {
                let g = &c[i..i + n];
                if seen.contains(&g) {
                    continue;
                }
                seen.push(g);
                correct[n - 1] += count(&c, g).min(count(&r, g));
            }
        }
    }
    (sys, refl, correct, total)
}

/// BLEU with exponential smoothing from the statistics above.
pub fn bleu_oracle(pairs: &[(&str, &str)], effective_order: bool) -> f64 {
    let (sys, refl, correct, total) = bleu_stats_oracle(pairs);
    let bp = if sys >= refl {
        1.0
    } else if sys == 0 {
        0.0
    } else {
        (1.0 - refl as f64 / sys as f64).exp()
    };
    if correct.iter().all(|&c| c == 0) {
        return 0.0;
    }
    let mut p = [0.0f64; 4];
    let mut order = 4;
    let mut smooth = 1.0;
    for n in 0..4 {
        if total[n] == 0 {
            break;
        }
        if effective_order {
            order = n + 1;
        }
        p[n] = if correct[n] == 0 {
            smooth *= 2.0;
            100.0 / (smooth * total[n] as f64)
        } else {
            100.0 * correct[n] as f64 / total[n] as f64
        };
    }
    let logs: f64 = p[..order]
        .iter()
        .map(|&x| if x == 0.0 { -9_999_999_999.0 } else { x.ln() })
        .sum();
    bp * (logs / order as f64).exp()
}

// ---------------------------------------------------------------- CKA

fn gram(x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut k = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            k[i][j] = x[i].iter().zip(&x[j]).map(|(a, b)| a * b).sum();
        }
    }
    k
}

fn centered(k: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = k.len();
    let nf = n as f64;
    let row: Vec<f64> = k.iter().map(|r| r.iter().sum::<f64>() / nf).collect();
    let all: f64 = row.iter().sum::<f64>() / nf;
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            out[i][j] = k[i][j] - row[i] - row[j] + all;
        }
    }
    out
}

fn hsic(k: &[Vec<f64>], l: &[Vec<f64>]) -> f64 {
    let mut s = 0.0;
    for i in 0..k.len() {
        for j in 0..k.len() {
            s += k[i][j] * l[i][j];
        }
    }
    s
}

/// Kernel-form linear CKA with explicit double loops over examples.
pub fn cka_oracle(x: &[Vec<f64>], y: &[Vec<f64>]) -> f64 {
    let k = centered(&gram(x));
    let l = centered(&gram(y));
    hsic(&k, &l) / (hsic(&k, &k) * hsic(&l, &l)).sqrt()
}

// ---------------------------------------------------------------- clustering

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// Community detection by brute force: every point's neighbourhood, largest
/// first (ties by id), claimed greedily. Returns member ids per cluster.
pub fn cluster_oracle(
    points: &[(String, Vec<f64>)],
    threshold: f64,
    min_size: usize,
) -> Vec<Vec<String>> {
    let n = points.len();
    let mut hoods: Vec<(usize, Vec<usize>)> = Vec::new();
    for i in 0..n {
        let mut members = Vec::new();
        for j in 0..n {
            if i == j || cosine(&points[i].1, &points[j].1) >= threshold {
                members.push(j);
            }
        }
        if members.len() >= min_size {
            hoods.push((i, members));
        }
    }
    // selection sort, spelled out
    let mut ordered = Vec::new();
    while !hoods.is_empty() {
        let mut best = 0;
        for k in 1..hoods.len() {
            let (a, b) = (&hoods[k], &hoods[best]);
            if a.1.len() > b.1.len() || (a.1.len() == b.1.len() && points[a.0].0 < points[b.0].0) {
                best = k;
            }
        }
        ordered.push(hoods.remove(best));
    }
    let mut claimed = vec![false; n];
    let mut out = Vec::new();
    for (rep, members) in ordered {
        if claimed[rep] {
            continue;
        }
        let free: Vec<usize> = members.into_iter().filter(|&j| !claimed[j]).collect();
        if free.len() < min_size {
            continue;
        }
        let mut ids = vec![points[rep].0.clone()];
        for &j in &free {
            claimed[j] = true;
            if j != rep {
                ids.push(points[j].0.clone());
            }
        }
        out.push(ids);
    }
    out
}

pub fn random_unit_vectors(seed: u64, n: usize, dim: usize) -> Vec<(String, Vec<f64>)> {
    let mut r = rng(seed);
    (0..n)
        .map(|i| {
            let v: Vec<f64> = (0..dim).map(|_| r.random_range(-1.0..1.0)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            (
                format!("p{i:03}"),
                v.into_iter().map(|x| x / norm).collect(),
            )
        })
        .collect()
}

// ---------------------------------------------------------------- unimax

/// Quota procedure run to a fixed point: every round, keys whose cap fits
/// under the even share of what is left are frozen at their cap; when none
/// fits, the rest split the remainder evenly. `None` is an unbounded key.
pub fn unimax_oracle(
    avail: &BTreeMap<String, Option<u64>>,
    budget: u64,
    cap: Q,
) -> BTreeMap<String, Q> {
    let mut out = BTreeMap::new();
    let mut active: Vec<&String> = avail.keys().collect();
    let mut remaining = Q::from_integer(budget as i128);
    loop {
        if active.is_empty() {
            return out;
        }
        let share = remaining / Q::from_integer(active.len() as i128);
        let fits: Vec<&String> = active
            .iter()
            .copied()
            .filter(|k| avail[*k].is_some_and(|a| cap * Q::from_integer(a as i128) <= share))
            .collect();
        if fits.is_empty() {
            for k in active {
                out.insert(k.clone(), share);
            }
            return out;
        }
        for k in &fits {
            let c = cap * Q::from_integer(avail[*k].unwrap() as i128);
            remaining -= c;
            out.insert((*k).clone(), c);
        }
        active.retain(|k| !fits.contains(k));
    }
}

// ---------------------------------------------------------------- stats

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Standard error of the mean with the n - 1 denominator.
pub fn sem(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    (var / xs.len() as f64).sqrt()
}
