use serde::Serialize;

use super::trace::{collapse, ReconstructedTrace};
use crate::model::StatementId;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Accuracy {
    /// Instruction events inside matched statement records.
    pub matched_instructions: usize,
    pub mapped_instructions: usize,
    pub unmapped_instructions: usize,
    pub matched_statements: usize,
    pub reference_statements: usize,
    pub reconstructed_statements: usize,
}

impl Accuracy {
    /// Fraction of mapped instruction events that line up with the reference trace.
    pub fn ratio(&self) -> f64 {
        if self.mapped_instructions == 0 {
            return 1.0;
        }
        self.matched_instructions as f64 / self.mapped_instructions as f64
    }

    pub fn statement_ratio(&self) -> f64 {
        let denom = self.reference_statements.max(self.reconstructed_statements);
        if denom == 0 {
            return 1.0;
        }
        self.matched_statements as f64 / denom as f64
    }

    pub fn unmapped_ratio(&self) -> f64 {
        let total = self.mapped_instructions + self.unmapped_instructions;
        if total == 0 {
            return 0.0;
        }
        self.unmapped_instructions as f64 / total as f64
    }

    pub fn add(&mut self, o: &Accuracy) {
        self.matched_instructions += o.matched_instructions;
        self.mapped_instructions += o.mapped_instructions;
        self.unmapped_instructions += o.unmapped_instructions;
        self.matched_statements += o.matched_statements;
        self.reference_statements += o.reference_statements;
        self.reconstructed_statements += o.reconstructed_statements;
    }
}

/// Compares a reconstructed trace with the reference statement trace.
pub fn score(reference: &[StatementId], rec: &ReconstructedTrace) -> Accuracy {
    let r = collapse(reference);
    let v = rec.statements();
    let weights: Vec<u64> = rec.records.iter().map(|x| x.instructions as u64).collect();
    let pairs = lcs_pairs_weighted(&r, &v, &weights);
    Accuracy {
        matched_instructions: pairs
            .iter()
            .map(|&(_, j)| rec.records[j].instructions)
            .sum(),
        mapped_instructions: rec.mapped,
        unmapped_instructions: rec.unmapped,
        matched_statements: pairs.len(),
        reference_statements: r.len(),
        reconstructed_statements: v.len(),
    }
}

/// Index pairs of one longest common subsequence.
pub fn lcs_pairs<T: PartialEq>(a: &[T], b: &[T]) -> Vec<(usize, usize)> {
    lcs_pairs_weighted(a, b, &vec![0; b.len()])
}

/// Longest common subsequence; among those of maximal length, one with the largest
/// total weight of matched `b` elements. Linear space (Hirschberg).
pub fn lcs_pairs_weighted<T: PartialEq>(a: &[T], b: &[T], wb: &[u64]) -> Vec<(usize, usize)> {
    assert_eq!(b.len(), wb.len());
    let mut out = Vec::new();
    hirschberg(a, b, wb, 0, 0, &mut out);
    out
}

/// (length, weight), compared lexicographically.
type Score = (usize, u64);

fn add(x: Score, w: u64) -> Score {
    (x.0 + 1, x.1 + w)
}

/// `row[j]` = best score of `a` against `b[..j]`.
fn lcs_row<T: PartialEq>(a: &[T], b: &[T], wb: &[u64]) -> Vec<Score> {
    let mut prev = vec![(0, 0); b.len() + 1];
    let mut cur = vec![(0, 0); b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            let skip = cur[j].max(prev[j + 1]);
            cur[j + 1] = if x == y {
                skip.max(add(prev[j], wb[j]))
            } else {
                skip
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev
}

/// `row[j]` = best score of `a` against `b[j..]`.
fn lcs_row_rev<T: PartialEq>(a: &[T], b: &[T], wb: &[u64]) -> Vec<Score> {
    let mut prev = vec![(0, 0); b.len() + 1];
    let mut cur = vec![(0, 0); b.len() + 1];
    for x in a.iter().rev() {
        for (j, y) in b.iter().enumerate().rev() {
            let skip = cur[j + 1].max(prev[j]);
            cur[j] = if x == y {
                skip.max(add(prev[j + 1], wb[j]))
            } else {
                skip
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev
}

fn hirschberg<T: PartialEq>(
    a: &[T],
    b: &[T],
    wb: &[u64],
    oa: usize,
    ob: usize,
    out: &mut Vec<(usize, usize)>,
) {
    if a.is_empty() || b.is_empty() {
        return;
    }
    if a.len() == 1 {
        let best = (0..b.len())
            .filter(|&j| b[j] == a[0])
            .max_by_key(|&j| (wb[j], std::cmp::Reverse(j)));
        if let Some(j) = best {
            out.push((oa, ob + j));
        }
        return;
    }
    let mid = a.len() / 2;
    let left = lcs_row(&a[..mid], b, wb);
    let right = lcs_row_rev(&a[mid..], b, wb);
    let k = (0..=b.len())
        .max_by_key(|&k| {
            (
                (left[k].0 + right[k].0, left[k].1 + right[k].1),
                std::cmp::Reverse(k),
            )
        })
        .unwrap();
    hirschberg(&a[..mid], &b[..k], &wb[..k], oa, ob, out);
    hirschberg(&a[mid..], &b[k..], &wb[k..], oa + mid, ob + k, out);
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lcs_len_dp(a: &[u8], b: &[u8]) -> usize {
        lcs_row(a, b, &vec![0; b.len()]).last().unwrap().0
    }

    /// Exhaustive best (length, weight) over all common subsequences.
    fn brute(a: &[u8], b: &[u8], w: &[u64]) -> Score {
        fn go(a: &[u8], b: &[u8], w: &[u64], i: usize, j: usize) -> Score {
            if i == a.len() || j == b.len() {
                return (0, 0);
            }
            let mut best = go(a, b, w, i + 1, j).max(go(a, b, w, i, j + 1));
            if a[i] == b[j] {
                best = best.max(add(go(a, b, w, i + 1, j + 1), w[j]));
            }
            best
        }
        go(a, b, w, 0, 0)
    }

    #[test]
    fn heavier_occurrence_wins_ties() {
        // V' = [A, B, A, B] against R' = [A, B]: the heavy second B run is the one matched.
        let p = lcs_pairs_weighted(&[1, 2], &[1, 2, 1, 2], &[3, 1, 1, 9]);
        assert_eq!(p, vec![(0, 0), (1, 3)]);
    }

    #[test]
    fn small_cases() {
        assert_eq!(lcs_pairs(&[1, 2, 3], &[1, 2, 3]).len(), 3);
        assert_eq!(lcs_pairs(&[1, 2, 3], &[3, 2, 1]).len(), 1);
        assert_eq!(lcs_pairs::<u8>(&[], &[1]).len(), 0);
        assert_eq!(
            lcs_pairs(&[1, 5, 2, 3], &[1, 2, 4, 3]),
            vec![(0, 0), (2, 1), (3, 3)]
        );
    }

    proptest! {
        #[test]
        fn pairs_form_a_common_subsequence_of_maximal_length(
            a in proptest::collection::vec(0u8..4, 0..40),
            b in proptest::collection::vec(0u8..4, 0..40),
        ) {
            let p = lcs_pairs(&a, &b);
            prop_assert_eq!(p.len(), lcs_len_dp(&a, &b));
            for w in p.windows(2) {
                prop_assert!(w[0].0 < w[1].0 && w[0].1 < w[1].1);
            }
            for &(i, j) in &p {
                prop_assert_eq!(a[i], b[j]);
            }
        }

        #[test]
        fn weighted_pairs_are_optimal(
            a in proptest::collection::vec(0u8..3, 0..9),
            b in proptest::collection::vec(0u8..3, 0..9),
            seed in proptest::collection::vec(0u64..10, 9),
        ) {
            let w = &seed[..b.len()];
            let p = lcs_pairs_weighted(&a, &b, w);
            for win in p.windows(2) {
                prop_assert!(win[0].0 < win[1].0 && win[0].1 < win[1].1);
            }
            let got: Score = (p.len(), p.iter().map(|&(_, j)| w[j]).sum());
            prop_assert_eq!(got, brute(&a, &b, w));
        }
    }
}
