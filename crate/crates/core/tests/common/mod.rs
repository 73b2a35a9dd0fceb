//! Independent reference implementations and instance generators shared by
//! the integration tests. Everything here is deliberately naive.

#![allow(dead_code)]

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scfp::{ExpressionMatrix, NeighborGraph};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random nonnegative matrix where each entry is nonzero with probability
/// `density`. Nonzero values are small integers plus a fractional part.
pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, m: usize, density: f64) -> ExpressionMatrix {
    let values = (0..n * m)
        .map(|_| {
            if rng.random::<f64>() < density {
                rng.random_range(1..20) as f64 + rng.random::<f64>()
            } else {
                0.0
            }
        })
        .collect();
    ExpressionMatrix::new(n, m, values).unwrap()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// All cells ordered by decreasing cosine similarity to `i` (ties to lower
/// index), excluding `i`.
pub fn ranked_neighbors(x: &ExpressionMatrix, i: usize) -> Vec<(usize, f64)> {
    let mut others: Vec<(usize, f64)> = (0..x.n_cells())
        .filter(|&j| j != i)
        .map(|j| (j, cosine(x.row(i), x.row(j))))
        .collect();
    others.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    others
}

/// Dense row-major graph matrix.
pub fn dense(graph: &NeighborGraph) -> Vec<Vec<f64>> {
    graph.to_dense()
}

/// Row-normalized circulant graph: every cell links to the next `k` cells
/// around a ring. Its adjacency is doubly stochastic.
pub fn circulant(n: usize, k: usize) -> NeighborGraph {
    let rows: Vec<Vec<usize>> = (0..n)
        .map(|i| (1..=k).map(|s| (i + s) % n).collect())
        .collect();
    scfp::row_normalize(&rows)
}

/// Row-normalized symmetric ring: every cell links to `k` cells on each
/// side. Its adjacency is symmetric.
pub fn symmetric_ring(n: usize, k: usize) -> NeighborGraph {
    let rows: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (1..=k)
                .flat_map(|s| [(i + s) % n, (i + n - s) % n])
                .collect()
        })
        .collect();
    scfp::row_normalize(&rows)
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| a[r][col].abs().partial_cmp(&a[s][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        let (top, rest) = a.split_at_mut(col + 1);
        let pivot_row = &top[col];
        for (r, row) in rest.iter_mut().enumerate() {
            let f = row[col] / pivot_row[col];
            for (x, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= f * p;
            }
            b[col + 1 + r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Harmonic extension of one column: unknown values average their
/// neighbors, known values are fixed.
pub fn harmonic_column(graph: &NeighborGraph, column: &[f64], known: &[bool]) -> Vec<f64> {
    let a = dense(graph);
    let unknown: Vec<usize> = (0..column.len()).filter(|&i| !known[i]).collect();
    let mut sys = vec![vec![0.0; unknown.len()]; unknown.len()];
    let mut rhs = vec![0.0; unknown.len()];
    for (p, &i) in unknown.iter().enumerate() {
        sys[p][p] += 1.0;
        for (j, &w) in a[i].iter().enumerate() {
            match unknown.iter().position(|&u| u == j) {
                Some(q) => sys[p][q] -= w,
                None => rhs[p] += w * column[j],
            }
        }
    }
    let solved = gauss_solve(sys, rhs);
    let mut out = column.to_vec();
    for (p, &i) in unknown.iter().enumerate() {
        out[i] = solved[p];
    }
    out
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn choose2(n: f64) -> f64 {
    n * (n - 1.0) / 2.0
}

/// ARI from explicit pair counting over all item pairs.
pub fn ari_by_pairs(a: &[usize], b: &[usize]) -> f64 {
    let (mut n11, mut n10, mut n01, mut n00) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            match (a[i] == a[j], b[i] == b[j]) {
                (true, true) => n11 += 1.0,
                (true, false) => n10 += 1.0,
                (false, true) => n01 += 1.0,
                (false, false) => n00 += 1.0,
            }
        }
    }
    let denom = (n00 + n01) * (n01 + n11) + (n00 + n10) * (n10 + n11);
    if denom == 0.0 {
        1.0
    } else {
        2.0 * (n00 * n11 - n01 * n10) / denom
    }
}

fn entropy(labels: &[usize]) -> f64 {
    let mut counts: HashMap<usize, f64> = HashMap::new();
    labels
        .iter()
        .for_each(|&l| *counts.entry(l).or_default() += 1.0);
    let n = labels.len() as f64;
    -counts.values().map(|&c| c / n * (c / n).ln()).sum::<f64>()
}

/// NMI with geometric-mean normalization, straight from the definitions.
pub fn nmi_by_definition(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as f64;
    let (ha, hb) = (entropy(a), entropy(b));
    if ha == 0.0 && hb == 0.0 {
        return 1.0;
    }
    if ha == 0.0 || hb == 0.0 {
        return 0.0;
    }
    let mut joint: HashMap<(usize, usize), f64> = HashMap::new();
    a.iter()
        .zip(b)
        .for_each(|(&x, &y)| *joint.entry((x, y)).or_default() += 1.0);
    let count = |labels: &[usize], v: usize| labels.iter().filter(|&&l| l == v).count() as f64;
    let mi: f64 = joint
        .iter()
        .map(|(&(x, y), &c)| c / n * (c * n / (count(a, x) * count(b, y))).ln())
        .sum();
    mi / (ha * hb).sqrt()
}

/// Every injective map from `0..small` into `0..large`.
pub fn injections(small: usize, large: usize) -> Vec<Vec<usize>> {
    fn go(
        small: usize,
        large: usize,
        used: &mut Vec<bool>,
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if cur.len() == small {
            out.push(cur.clone());
            return;
        }
        for j in 0..large {
            if !used[j] {
                used[j] = true;
                cur.push(j);
                go(small, large, used, cur, out);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(
        small,
        large,
        &mut vec![false; large],
        &mut Vec::new(),
        &mut out,
    );
    out
}

/// Best accuracy over every one-to-one matching of predicted clusters to
/// true classes.
pub fn ca_by_enumeration(pred: &[usize], truth: &[usize]) -> f64 {
    let (p, _) = scfp::evaluation::encode_labels(pred);
    let (t, _) = scfp::evaluation::encode_labels(truth);
    let kp = p.iter().max().unwrap() + 1;
    let kt = t.iter().max().unwrap() + 1;
    let hits =
        |f: &dyn Fn(usize, usize) -> bool| p.iter().zip(&t).filter(|(&a, &b)| f(a, b)).count();
    let best = if kp <= kt {
        injections(kp, kt)
            .iter()
            .map(|m| hits(&|a, b| m[a] == b))
            .max()
            .unwrap()
    } else {
        injections(kt, kp)
            .iter()
            .map(|m| hits(&|a, b| m[b] == a))
            .max()
            .unwrap()
    };
    best as f64 / pred.len() as f64
}

/// Minimum total cost over every assignment that covers the smaller side.
pub fn min_assignment_cost(cost: &[Vec<f64>]) -> f64 {
    let (r, c) = (cost.len(), cost[0].len());
    if r <= c {
        injections(r, c)
            .iter()
            .map(|m| (0..r).map(|i| cost[i][m[i]]).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    } else {
        injections(c, r)
            .iter()
            .map(|m| (0..c).map(|j| cost[m[j]][j]).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn random_labels(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..k)).collect()
}
