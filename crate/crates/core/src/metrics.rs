//! Partition-agreement metrics: normalized mutual information and the
//! adjusted Rand index.
//!
//! Labels are arbitrary non-negative integers; label 0 (used elsewhere for
//! unassigned nodes) counts as a cluster of its own, so detectors that
//! leave nodes unassigned pay for it.

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("labelings have different lengths: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("labelings are empty")]
    EmptyLabeling,
}

/// Joint label counts between two labelings of the same items.
#[derive(Debug, Clone)]
pub struct ContingencyTable {
    pub counts: Vec<Vec<u64>>,
    pub row_sums: Vec<u64>,
    pub col_sums: Vec<u64>,
    pub total: u64,
}

impl ContingencyTable {
    pub fn from_labelings(a: &[usize], b: &[usize]) -> Result<Self, MetricsError> {
        if a.len() != b.len() {
            return Err(MetricsError::LengthMismatch {
                a: a.len(),
                b: b.len(),
            });
        }
        if a.is_empty() {
            return Err(MetricsError::EmptyLabeling);
        }
        let row_index = index_labels(a);
        let col_index = index_labels(b);
        let mut counts = vec![vec![0u64; col_index.len()]; row_index.len()];
        for (&la, &lb) in a.iter().zip(b) {
            counts[row_index[&la]][col_index[&lb]] += 1;
        }
        let row_sums: Vec<u64> = counts.iter().map(|r| r.iter().sum()).collect();
        let mut col_sums = vec![0u64; col_index.len()];
        for row in &counts {
            for (j, &c) in row.iter().enumerate() {
                col_sums[j] += c;
            }
        }
        Ok(ContingencyTable {
            counts,
            row_sums,
            col_sums,
            total: a.len() as u64,
        })
    }
}

fn index_labels(labels: &[usize]) -> BTreeMap<usize, usize> {
    let mut map = BTreeMap::new();
    for &l in labels {
        let next = map.len();
        map.entry(l).or_insert(next);
    }
    map
}

fn entropy(sums: &[u64], n: f64) -> f64 {
    sums.iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Normalized mutual information, `2 I(A;B) / (H(A) + H(B))`, in `[0, 1]`.
///
/// Natural logarithms (the normalization cancels the base). When both
/// labelings are constant, both entropies vanish and the agreement is
/// perfect by convention: 1.
pub fn nmi(a: &[usize], b: &[usize]) -> Result<f64, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::LengthMismatch {
            a: a.len(),
            b: b.len(),
        });
    }
    // Pin the summation order so nmi(a, b) == nmi(b, a) bit for bit.
    let (a, b) = if canonical(a) <= canonical(b) {
        (a, b)
    } else {
        (b, a)
    };
    let table = ContingencyTable::from_labelings(a, b)?;
    let n = table.total as f64;
    let h_a = entropy(&table.row_sums, n);
    let h_b = entropy(&table.col_sums, n);
    if h_a == 0.0 && h_b == 0.0 {
        return Ok(1.0);
    }
    let mut mi = 0.0;
    for (i, row) in table.counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let p = c as f64 / n;
                mi += p * ((n * c as f64) / (table.row_sums[i] as f64 * table.col_sums[j] as f64))
                    .ln();
            }
        }
    }
    Ok((2.0 * mi / (h_a + h_b)).clamp(0.0, 1.0))
}

fn comb2(x: u64) -> f64 {
    (x as f64) * (x as f64 - 1.0) / 2.0
}

/// Adjusted Rand index under the Hubert-Arabie permutation model:
/// `(Index - Expected) / (Max - Expected)`.
///
/// In the degenerate case `Max == Expected` (e.g. both labelings constant,
/// or both all-singletons) the value is 1 when the partitions are identical
/// up to relabeling, else 0.
pub fn ari(a: &[usize], b: &[usize]) -> Result<f64, MetricsError> {
    let table = ContingencyTable::from_labelings(a, b)?;
    let index: f64 = table
        .counts
        .iter()
        .flatten()
        .map(|&c| comb2(c))
        .sum();
    let sum_a: f64 = table.row_sums.iter().map(|&c| comb2(c)).sum();
    let sum_b: f64 = table.col_sums.iter().map(|&c| comb2(c)).sum();
    let pairs = comb2(table.total);
    if pairs == 0.0 {
        // A single item: partitions are trivially identical.
        return Ok(1.0);
    }
    let expected = sum_a * sum_b / pairs;
    let max = 0.5 * (sum_a + sum_b);
    if max == expected {
        return Ok(if same_partition(a, b) { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / (max - expected))
}

/// True iff the two labelings induce the same partition (identical up to
/// relabeling), via first-occurrence canonical forms.
fn same_partition(a: &[usize], b: &[usize]) -> bool {
    canonical(a) == canonical(b)
}

fn canonical(labels: &[usize]) -> Vec<usize> {
    let mut map = BTreeMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identical_labelings_score_one() {
        let l = vec![1, 1, 2, 2, 3];
        assert_eq!(nmi(&l, &l).unwrap(), 1.0);
        assert_eq!(ari(&l, &l).unwrap(), 1.0);
    }

    #[test]
    fn crossed_pairs_have_zero_mutual_information() {
        // Contingency [[1,1],[1,1]]: I = 0.
        let a = vec![1, 1, 2, 2];
        let b = vec![1, 2, 2, 1];
        assert_eq!(nmi(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn trivial_partition_against_nontrivial_scores_zero() {
        let a = vec![1, 1, 1, 1];
        let b = vec![1, 2, 2, 1];
        assert_eq!(nmi(&a, &b).unwrap(), 0.0);
        assert_eq!(ari(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn ari_hand_computed_negative_case() {
        // Index 0, Expected 2*2/6, Max 2 -> ARI = -0.5.
        let a = vec![1, 1, 2, 2];
        let b = vec![1, 2, 1, 2];
        assert_relative_eq!(ari(&a, &b).unwrap(), -0.5, max_relative = 1e-12);
    }

    #[test]
    fn ari_is_relabeling_invariant() {
        let a = vec![1, 1, 2, 2];
        let b = vec![2, 2, 1, 1];
        assert_eq!(ari(&a, &b).unwrap(), 1.0);
        assert_eq!(nmi(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn both_constant_labelings_agree_by_convention() {
        let a = vec![7, 7, 7];
        let b = vec![2, 2, 2];
        assert_eq!(nmi(&a, &b).unwrap(), 1.0);
        assert_eq!(ari(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn all_singletons_degenerate_case() {
        let a = vec![1, 2, 3];
        let b = vec![3, 1, 2];
        // Both are the all-singletons partition: identical up to relabeling.
        assert_eq!(ari(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn errors_on_bad_input() {
        assert_eq!(
            nmi(&[1, 2], &[1]).unwrap_err(),
            MetricsError::LengthMismatch { a: 2, b: 1 }
        );
        assert_eq!(nmi(&[], &[]).unwrap_err(), MetricsError::EmptyLabeling);
        assert_eq!(ari(&[], &[]).unwrap_err(), MetricsError::EmptyLabeling);
    }

    #[test]
    fn metrics_are_symmetric() {
        let a = vec![1, 1, 2, 3, 3, 2, 1];
        let b = vec![2, 1, 1, 3, 2, 2, 1];
        assert_eq!(nmi(&a, &b).unwrap(), nmi(&b, &a).unwrap());
        assert_eq!(ari(&a, &b).unwrap(), ari(&b, &a).unwrap());
    }
}
