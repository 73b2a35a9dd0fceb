//! Partition-agreement metrics: adjusted Rand index, normalized mutual
//! information (geometric-mean normalization) and Hungarian-matched
//! clustering accuracy.

use std::collections::HashMap;
use std::hash::Hash;

use crate::error::{Error, Result};
use crate::evaluation::hungarian::hungarian_assign;

/// Maps arbitrary labels to dense ids `0..k` in first-seen order.
pub fn encode_labels<T: Eq + Hash + Clone>(labels: &[T]) -> (Vec<usize>, Vec<T>) {
    let mut ids = HashMap::new();
    let mut names = Vec::new();
    let encoded = labels
        .iter()
        .map(|l| {
            *ids.entry(l.clone()).or_insert_with(|| {
                names.push(l.clone());
                names.len() - 1
            })
        })
        .collect();
    (encoded, names)
}

struct Contingency {
    counts: Vec<Vec<usize>>,
    row_sums: Vec<usize>,
    col_sums: Vec<usize>,
    n: usize,
}

fn contingency(a: &[usize], b: &[usize]) -> Result<Contingency> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "label vectors have lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (a, _) = encode_labels(a);
    let (b, _) = encode_labels(b);
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![vec![0usize; kb]; ka];
    for (&i, &j) in a.iter().zip(&b) {
        counts[i][j] += 1;
    }
    let row_sums = counts.iter().map(|r| r.iter().sum()).collect();
    let col_sums = (0..kb).map(|j| counts.iter().map(|r| r[j]).sum()).collect();
    Ok(Contingency {
        counts,
        row_sums,
        col_sums,
        n: a.len(),
    })
}

fn pairs(n: usize) -> f64 {
    let n = n as f64;
    n * (n - 1.0) / 2.0
}

/// Adjusted Rand index plus whether the degenerate 0/0 convention (value
/// 1.0) was used, which happens only when both partitions are a single
/// cluster or both are all singletons.
pub fn adjusted_rand_index_flagged(a: &[usize], b: &[usize]) -> Result<(f64, bool)> {
    if a.len() < 2 {
        return Err(Error::param("labels", "need at least 2 items"));
    }
    let t = contingency(a, b)?;
    let index: f64 = t.counts.iter().flatten().map(|&c| pairs(c)).sum();
    let sum_a: f64 = t.row_sums.iter().map(|&c| pairs(c)).sum();
    let sum_b: f64 = t.col_sums.iter().map(|&c| pairs(c)).sum();
    let expected = sum_a * sum_b / pairs(t.n);
    let max_index = 0.5 * (sum_a + sum_b);
    if max_index == expected {
        return Ok((1.0, true));
    }
    Ok(((index - expected) / (max_index - expected), false))
}

pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    adjusted_rand_index_flagged(a, b).map(|(v, _)| v)
}

fn entropy(sums: &[usize], n: f64) -> f64 {
    sums.iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Normalized mutual information plus whether a zero-entropy convention
/// was applied (both single-cluster gives 1.0, only one gives 0.0).
pub fn normalized_mutual_info_flagged(a: &[usize], b: &[usize]) -> Result<(f64, bool)> {
    if a.is_empty() {
        return Err(Error::param("labels", "label vectors are empty"));
    }
    let t = contingency(a, b)?;
    let n = t.n as f64;
    let ha = entropy(&t.row_sums, n);
    let hb = entropy(&t.col_sums, n);
    let (single_a, single_b) = (t.row_sums.len() == 1, t.col_sums.len() == 1);
    if single_a && single_b {
        return Ok((1.0, true));
    }
    if single_a || single_b {
        return Ok((0.0, true));
    }
    let mut mi = 0.0;
    for (i, row) in t.counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let pij = c as f64 / n;
                let ratio = (c as f64 * n) / (t.row_sums[i] as f64 * t.col_sums[j] as f64);
                mi += pij * ratio.ln();
            }
        }
    }
    Ok(((mi / (ha * hb).sqrt()).clamp(0.0, 1.0), false))
}

pub fn normalized_mutual_info(a: &[usize], b: &[usize]) -> Result<f64> {
    normalized_mutual_info_flagged(a, b).map(|(v, _)| v)
}

/// Fraction of items on which `pred` agrees with `truth` under the best
/// one-to-one relabeling of predicted clusters.
pub fn clustering_accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.is_empty() {
        return Err(Error::param("labels", "label vectors are empty"));
    }
    let t = contingency(pred, truth)?;
    let cost: Vec<Vec<f64>> = t
        .counts
        .iter()
        .map(|r| r.iter().map(|&c| -(c as f64)).collect())
        .collect();
    let assignment = hungarian_assign(&cost)?;
    Ok(-assignment.cost / t.n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ari_examples() {
        assert_eq!(
            adjusted_rand_index(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap(),
            1.0
        );
        assert_eq!(
            adjusted_rand_index(&[0, 1, 2, 0], &[0, 1, 2, 0]).unwrap(),
            1.0
        );
        // 6 pairs: none together in both; a has 2 together pairs, b has 2.
        // index 0, expected 2*2/6, max 2: (0 - 2/3) / (2 - 2/3) = -0.5
        let v = adjusted_rand_index(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap();
        assert!((v + 0.5).abs() < 1e-15, "{v}");
        assert!(adjusted_rand_index(&[0, 1], &[0]).is_err());
        assert_eq!(
            adjusted_rand_index_flagged(&[3, 3, 3], &[1, 1, 1]).unwrap(),
            (1.0, true)
        );
    }

    #[test]
    fn nmi_examples() {
        assert!(
            (normalized_mutual_info(&[0, 0, 1, 1, 2], &[0, 0, 1, 1, 2]).unwrap() - 1.0).abs()
                < 1e-15
        );
        assert_eq!(
            normalized_mutual_info(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap(),
            0.0
        );
        let a = [0, 0, 1, 2, 2, 1];
        let b = [1, 1, 1, 0, 0, 2];
        let relabeled = [7, 7, 7, 3, 3, 5];
        assert_eq!(
            normalized_mutual_info(&a, &b).unwrap(),
            normalized_mutual_info(&a, &relabeled).unwrap()
        );
        assert_eq!(
            normalized_mutual_info_flagged(&[0, 0], &[1, 1]).unwrap(),
            (1.0, true)
        );
        assert_eq!(
            normalized_mutual_info_flagged(&[0, 0], &[0, 1]).unwrap(),
            (0.0, true)
        );
    }

    #[test]
    fn ca_examples() {
        assert_eq!(clustering_accuracy(&[1, 1, 0], &[0, 0, 1]).unwrap(), 1.0);
        assert!(
            (clustering_accuracy(&[0, 0, 1, 1, 1], &[0, 1, 0, 1, 1]).unwrap() - 0.6).abs() < 1e-15
        );
        assert_eq!(clustering_accuracy(&[2, 0, 1], &[2, 0, 1]).unwrap(), 1.0);
        // more predicted clusters than true labels
        assert_eq!(
            clustering_accuracy(&[0, 1, 2, 3], &[0, 0, 1, 1]).unwrap(),
            0.5
        );
        assert!(clustering_accuracy(&[0], &[0, 1]).is_err());
    }

    #[test]
    fn encode_is_first_seen() {
        let (ids, names) = encode_labels(&["b", "a", "b", "c"]);
        assert_eq!(ids, vec![0, 1, 0, 2]);
        assert_eq!(names, vec!["b", "a", "c"]);
    }
}
