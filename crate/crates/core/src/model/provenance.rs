use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::span::SourceSpan;

/// How faithfully an IR instruction's span reflects its origin.
///
/// Variant order gives the merge order: `Synthetic < Approximate < Exact`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Confidence {
    Synthetic,
    Approximate,
    Exact,
}

impl Confidence {
    pub fn code(self) -> char {
        match self {
            Confidence::Exact => 'E',
            Confidence::Approximate => 'A',
            Confidence::Synthetic => 'S',
        }
    }
}

/// Identifier of a source statement (the AST node id of the statement).
pub type StatementId = u32;

/// Source origin metadata carried by every IR instruction.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub primary_span: Option<SourceSpan>,
    pub confidence: Confidence,
    /// Call-site spans of the inlining history, outermost first.
    pub inline_chain: Vec<SourceSpan>,
    pub zk_constraint: Option<u32>,
    pub statement_id: Option<StatementId>,
}

impl Default for Provenance {
    fn default() -> Self {
        Self::synthetic()
    }
}

impl Provenance {
    pub fn exact(span: SourceSpan, statement_id: StatementId) -> Self {
        Self {
            primary_span: Some(span),
            confidence: Confidence::Exact,
            inline_chain: Vec::new(),
            zk_constraint: None,
            statement_id: Some(statement_id),
        }
    }

    pub fn synthetic() -> Self {
        Self {
            primary_span: None,
            confidence: Confidence::Synthetic,
            inline_chain: Vec::new(),
            zk_constraint: None,
            statement_id: None,
        }
    }

    pub fn with_confidence(mut self, confidence: Confidence) -> Self {
        self.confidence = confidence;
        self
    }

    pub fn downgrade_to(&mut self, confidence: Confidence) {
        self.confidence = self.confidence.min(confidence);
    }
}

/// The set of spans the frontend registered (statements, expressions, declarations).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SpanSet {
    spans: BTreeSet<SourceSpan>,
}

impl SpanSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, span: SourceSpan) {
        self.spans.insert(span);
    }

    pub fn contains(&self, span: &SourceSpan) -> bool {
        self.spans.contains(span)
    }

    pub fn len(&self) -> usize {
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &SourceSpan> {
        self.spans.iter()
    }

    /// Smallest registered span that contains both `a` and `b`, if they share a file.
    pub fn smallest_containing(&self, a: SourceSpan, b: SourceSpan) -> Option<SourceSpan> {
        if a.file != b.file {
            return None;
        }
        let need = a.cover(b);
        // Candidates start at or before `need.start`; the BTreeSet orders by start first.
        self.spans
            .range(..=SourceSpan::new(need.start, u32::MAX, u32::MAX))
            .filter(|s| s.contains(need))
            .min_by_key(|s| (s.length, s.start))
            .copied()
    }
}

impl FromIterator<SourceSpan> for SpanSet {
    fn from_iter<T: IntoIterator<Item = SourceSpan>>(iter: T) -> Self {
        Self {
            spans: iter.into_iter().collect(),
        }
    }
}

/// Combines the provenance of two fused instructions.
pub fn merge_provenance(a: &Provenance, b: &Provenance, registered: &SpanSet) -> Provenance {
    let mut confidence = a.confidence.min(b.confidence);
    let primary_span = match (a.primary_span, b.primary_span) {
        (Some(sa), Some(sb)) => match registered.smallest_containing(sa, sb) {
            Some(container) => Some(container),
            None => {
                confidence = confidence.min(Confidence::Approximate);
                Some(sa)
            }
        },
        (Some(sa), None) => Some(sa),
        (None, Some(sb)) => Some(sb),
        (None, None) => None,
    };
    let inline_chain = if a.inline_chain == b.inline_chain {
        a.inline_chain.clone()
    } else {
        a.inline_chain
            .iter()
            .zip(&b.inline_chain)
            .take_while(|(x, y)| x == y)
            .map(|(x, _)| *x)
            .collect()
    };
    Provenance {
        primary_span,
        confidence,
        inline_chain,
        zk_constraint: a.zk_constraint.or(b.zk_constraint),
        statement_id: a.statement_id.or(b.statement_id),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(s: u32, l: u32, f: u32) -> SourceSpan {
        SourceSpan::new(s, l, f)
    }

    // "x = 2 + 3;" with "2" @4, "3" @8, "2 + 3" @4..9
    fn registry() -> SpanSet {
        [sp(0, 10, 0), sp(4, 5, 0), sp(4, 1, 0), sp(8, 1, 0)]
            .into_iter()
            .collect()
    }

    #[test]
    fn fusing_operands_takes_enclosing_expression() {
        let a = Provenance::exact(sp(4, 1, 0), 1);
        let b = Provenance::exact(sp(8, 1, 0), 1);
        let m = merge_provenance(&a, &b, &registry());
        assert_eq!(m.primary_span, Some(sp(4, 5, 0)));
        assert_eq!(m.confidence, Confidence::Exact);
    }

    #[test]
    fn confidence_takes_minimum() {
        let a = Provenance::exact(sp(4, 1, 0), 1);
        let b = a.clone().with_confidence(Confidence::Approximate);
        let m = merge_provenance(&a, &b, &registry());
        assert_eq!(m.confidence, Confidence::Approximate);
        assert_eq!(m.primary_span, Some(sp(4, 1, 0)));
    }

    #[test]
    fn cross_file_merge_is_approximate_first_span() {
        let a = Provenance::exact(sp(4, 1, 0), 1);
        let b = Provenance::exact(sp(4, 1, 1), 2);
        let m = merge_provenance(&a, &b, &registry());
        assert_eq!(m.confidence, Confidence::Approximate);
        assert_eq!(m.primary_span, Some(sp(4, 1, 0)));
    }

    #[test]
    fn inline_chains_keep_common_prefix() {
        let mut a = Provenance::exact(sp(4, 1, 0), 1);
        let mut b = a.clone();
        a.inline_chain = vec![sp(0, 10, 0), sp(4, 5, 0)];
        b.inline_chain = vec![sp(0, 10, 0), sp(8, 1, 0)];
        assert_eq!(
            merge_provenance(&a, &b, &registry()).inline_chain,
            vec![sp(0, 10, 0)]
        );
    }

    #[test]
    fn merge_is_idempotent_and_never_raises_confidence() {
        let reg = registry();
        for conf in [
            Confidence::Exact,
            Confidence::Approximate,
            Confidence::Synthetic,
        ] {
            for span in [None, Some(sp(4, 1, 0)), Some(sp(0, 10, 0))] {
                let a = Provenance {
                    primary_span: span,
                    confidence: conf,
                    inline_chain: vec![sp(8, 1, 0)],
                    zk_constraint: Some(2),
                    statement_id: Some(3),
                };
                assert_eq!(merge_provenance(&a, &a, &reg), a);
                let b = Provenance::exact(sp(8, 1, 0), 3);
                let m = merge_provenance(&a, &b, &reg);
                assert!(m.confidence <= a.confidence && m.confidence <= b.confidence);
            }
        }
    }
}
