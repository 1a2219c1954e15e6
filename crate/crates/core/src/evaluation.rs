//! Clustering-agreement metrics between a detected partition and a ground
//! truth: NMI (normalized by the arithmetic mean of the entropies, natural
//! logs) and the Hubert--Arabie adjusted Rand index. Both are symmetric and
//! invariant under community relabeling.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::graph::{CommunityId, Partition};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("partitions cover different node sets")]
    NodeSetMismatch,
}

/// Joint label counts of two partitions over the same node set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    pub counts: BTreeMap<(CommunityId, CommunityId), usize>,
    pub row_marginals: BTreeMap<CommunityId, usize>,
    pub col_marginals: BTreeMap<CommunityId, usize>,
    pub n: usize,
}

impl ContingencyTable {
    pub fn build(a: &Partition, b: &Partition) -> Result<Self, EvalError> {
        if a.len() != b.len() {
            return Err(EvalError::NodeSetMismatch);
        }
        let mut counts = BTreeMap::new();
        let mut row_marginals = BTreeMap::new();
        let mut col_marginals = BTreeMap::new();
        for (u, ca) in a.assignments() {
            let cb = b.community_of(u).ok_or(EvalError::NodeSetMismatch)?;
            *counts.entry((ca, cb)).or_insert(0) += 1;
            *row_marginals.entry(ca).or_insert(0) += 1;
            *col_marginals.entry(cb).or_insert(0) += 1;
        }
        Ok(ContingencyTable {
            counts,
            row_marginals,
            col_marginals,
            n: a.len(),
        })
    }
}

/// True when the two partitions induce the same grouping of nodes,
/// irrespective of labels.
fn same_grouping(table: &ContingencyTable) -> bool {
    table.counts.len() == table.row_marginals.len()
        && table.row_marginals.len() == table.col_marginals.len()
}

/// Sums after sorting, so the result does not depend on the order labels or
/// cells are visited in. This is what makes symmetry and label invariance
/// hold exactly rather than up to rounding.
fn stable_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_unstable_by(f64::total_cmp);
    terms.iter().sum()
}

fn entropy(marginals: &BTreeMap<CommunityId, usize>, n: usize) -> f64 {
    let n = n as f64;
    stable_sum(
        marginals
            .values()
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.ln()
            })
            .collect(),
    )
}

/// Normalized mutual information: `2 * I(A;B) / (H(A) + H(B))`. Exactly 1.0
/// for identical groupings (including the degenerate both-single-cluster
/// case); 0.0 when exactly one side has zero entropy and the groupings
/// differ.
pub fn nmi(a: &Partition, b: &Partition) -> Result<f64, EvalError> {
    let table = ContingencyTable::build(a, b)?;
    if same_grouping(&table) {
        return Ok(1.0);
    }
    let n = table.n as f64;
    let ha = entropy(&table.row_marginals, table.n);
    let hb = entropy(&table.col_marginals, table.n);
    if ha == 0.0 || hb == 0.0 {
        return Ok(0.0);
    }
    let mi = stable_sum(
        table
            .counts
            .iter()
            .map(|(&(ra, cb), &joint)| {
                let pij = joint as f64 / n;
                let pa = table.row_marginals[&ra] as f64 / n;
                let pb = table.col_marginals[&cb] as f64 / n;
                pij * (pij / (pa * pb)).ln()
            })
            .collect(),
    );
    Ok((2.0 * mi / (ha + hb)).clamp(0.0, 1.0))
}

fn pairs(count: usize) -> f64 {
    (count * count.saturating_sub(1)) as f64 / 2.0
}

/// Adjusted Rand index via pair counts; 1.0 for identical groupings and in
/// the degenerate case where the expected index equals the maximum index.
pub fn ari(a: &Partition, b: &Partition) -> Result<f64, EvalError> {
    let table = ContingencyTable::build(a, b)?;
    if same_grouping(&table) {
        return Ok(1.0);
    }
    let index = stable_sum(table.counts.values().map(|&c| pairs(c)).collect());
    let row_pairs = stable_sum(table.row_marginals.values().map(|&c| pairs(c)).collect());
    let col_pairs = stable_sum(table.col_marginals.values().map(|&c| pairs(c)).collect());
    let total_pairs = pairs(table.n);
    if total_pairs == 0.0 {
        return Ok(1.0);
    }
    let expected = row_pairs * col_pairs / total_pairs;
    let maximum = (row_pairs + col_pairs) / 2.0;
    if (maximum - expected).abs() < 1e-15 {
        return Ok(1.0);
    }
    Ok(((index - expected) / (maximum - expected)).clamp(-1.0, 1.0))
}

/// Per-time-stamp agreement of a detected partition against ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthScore {
    pub nmi: f64,
    pub ari: f64,
    /// Detected nodes that the truth file does not cover; they are excluded
    /// from scoring.
    pub skipped: usize,
}

/// Scores `detected` against `truth` on their common node set. Nodes the
/// truth does not cover are skipped and counted.
pub fn score_against_truth(detected: &Partition, truth: &Partition) -> TruthScore {
    let mut det_pairs = Vec::new();
    let mut truth_pairs = Vec::new();
    let mut skipped = 0usize;
    for (u, c) in detected.assignments() {
        match truth.community_of(u) {
            Some(t) => {
                det_pairs.push((u, c));
                truth_pairs.push((u, t));
            }
            None => skipped += 1,
        }
    }
    if det_pairs.is_empty() {
        return TruthScore {
            nmi: 0.0,
            ari: 0.0,
            skipped,
        };
    }
    let det = Partition::from_assignments(&det_pairs);
    let tru = Partition::from_assignments(&truth_pairs);
    TruthScore {
        nmi: nmi(&det, &tru).expect("same node set by construction"),
        ari: ari(&det, &tru).expect("same node set by construction"),
        skipped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NodeId;

    fn n(id: u64) -> NodeId {
        NodeId(id)
    }

    fn c(id: u64) -> CommunityId {
        CommunityId(id)
    }

    fn partition(labels: &[u64]) -> Partition {
        Partition::from_assignments(
            &labels
                .iter()
                .enumerate()
                .map(|(i, &l)| (n(i as u64), c(l)))
                .collect::<Vec<_>>(),
        )
    }

    #[test]
    fn identical_partitions_score_exactly_one() {
        let a = partition(&[0, 0, 1, 1, 2]);
        let relabeled = partition(&[7, 7, 3, 3, 9]);
        assert_eq!(nmi(&a, &a).unwrap(), 1.0);
        assert_eq!(ari(&a, &a).unwrap(), 1.0);
        assert_eq!(nmi(&a, &relabeled).unwrap(), 1.0);
        assert_eq!(ari(&a, &relabeled).unwrap(), 1.0);
    }

    #[test]
    fn single_cluster_against_singletons_is_zero_nmi() {
        let one = partition(&[0, 0, 0, 0]);
        let singles = partition(&[0, 1, 2, 3]);
        assert_eq!(nmi(&one, &singles).unwrap(), 0.0);
        assert_eq!(ari(&one, &singles).unwrap(), 0.0);
    }

    #[test]
    fn both_single_cluster_is_one() {
        let a = partition(&[4, 4, 4]);
        let b = partition(&[9, 9, 9]);
        assert_eq!(nmi(&a, &b).unwrap(), 1.0);
        assert_eq!(ari(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn nmi_matches_contingency_oracle() {
        // a = {01|23}, b = {0|123}; expected value computed independently
        // from the contingency-table formula.
        let a = partition(&[0, 0, 1, 1]);
        let b = partition(&[0, 1, 1, 1]);
        let expected = 0.343711018485451;
        assert!((nmi(&a, &b).unwrap() - expected).abs() < 1e-12);
        assert!((nmi(&b, &a).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn ari_matches_pair_count_oracle() {
        // a = {01|23}, b = {02|13}: all six node pairs enumerated by hand
        // give -1/2.
        let a = partition(&[0, 0, 1, 1]);
        let b = partition(&[0, 1, 0, 1]);
        assert!((ari(&a, &b).unwrap() - (-0.5)).abs() < 1e-12);
        assert!((ari(&b, &a).unwrap() - (-0.5)).abs() < 1e-12);
    }

    #[test]
    fn node_set_mismatch_is_rejected() {
        let a = partition(&[0, 0]);
        let b = Partition::from_assignments(&[(n(0), c(0)), (n(5), c(0))]);
        assert_eq!(nmi(&a, &b), Err(EvalError::NodeSetMismatch));
        assert_eq!(ari(&a, &b), Err(EvalError::NodeSetMismatch));
    }

    #[test]
    fn truth_scoring_skips_uncovered_nodes() {
        let detected = partition(&[0, 0, 1, 1]);
        let truth = Partition::from_assignments(&[(n(0), c(0)), (n(1), c(0)), (n(2), c(1))]);
        let score = score_against_truth(&detected, &truth);
        assert_eq!(score.skipped, 1);
        assert_eq!(score.nmi, 1.0);
        assert_eq!(score.ari, 1.0);
    }
}
