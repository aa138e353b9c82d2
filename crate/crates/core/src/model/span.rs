use std::fmt;

use serde::{Deserialize, Serialize};

/// A half-open byte range `[start, start + length)` inside source file `file`.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct SourceSpan {
    pub start: u32,
    pub length: u32,
    pub file: u32,
}

/// How two spans relate as half-open intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpanRelation {
    Disjoint,
    Equal,
    AContainsB,
    BContainsA,
    PartialOverlap,
}

impl SourceSpan {
    pub const fn new(start: u32, length: u32, file: u32) -> Self {
        Self {
            start,
            length,
            file,
        }
    }

    /// Smallest span covering both `self` and `other`. Only meaningful within one file.
    pub fn cover(self, other: SourceSpan) -> SourceSpan {
        debug_assert_eq!(self.file, other.file);
        let start = self.start.min(other.start);
        let end = self.end().max(other.end());
        SourceSpan::new(start, end - start, self.file)
    }

    pub fn end(self) -> u32 {
        self.start + self.length
    }

    pub fn contains(self, other: SourceSpan) -> bool {
        matches!(
            span_relation(self, other),
            SpanRelation::Equal | SpanRelation::AContainsB
        )
    }

    /// Checks the span against the text lengths of the compilation unit.
    pub fn is_valid_in(self, file_lengths: &[u32]) -> bool {
        self.length >= 1
            && file_lengths.get(self.file as usize).is_some_and(|&len| {
                u64::from(self.start) + u64::from(self.length) <= u64::from(len)
            })
    }

    /// 1-based line and column of the span start, for display only.
    pub fn line_col(self, text: &str) -> (usize, usize) {
        let upto = &text.as_bytes()[..(self.start as usize).min(text.len())];
        let line = upto.iter().filter(|&&b| b == b'\n').count() + 1;
        let col = upto.iter().rev().take_while(|&&b| b != b'\n').count() + 1;
        (line, col)
    }

    pub fn snippet(self, text: &str) -> &str {
        text.get(self.start as usize..self.end() as usize)
            .unwrap_or("")
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.length, self.file)
    }
}

impl std::str::FromStr for SourceSpan {
    type Err = String;

    /// Parses `s:l:f`. Zero-length spans are rejected here.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected s:l:f, got {s:?}"));
        }
        let num = |p: &str| {
            p.parse::<u32>()
                .map_err(|e| format!("bad span field {p:?}: {e}"))
        };
        let span = SourceSpan::new(num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if span.length == 0 {
            return Err("span length must be at least 1".into());
        }
        Ok(span)
    }
}

/// Exact interval relation between two spans. Spans in different files are always disjoint.
pub fn span_relation(a: SourceSpan, b: SourceSpan) -> SpanRelation {
    if a.file != b.file {
        return SpanRelation::Disjoint;
    }
    let (a0, a1) = (a.start, a.end());
    let (b0, b1) = (b.start, b.end());
    if a0 == b0 && a1 == b1 {
        SpanRelation::Equal
    } else if a1 <= b0 || b1 <= a0 {
        SpanRelation::Disjoint
    } else if a0 <= b0 && b1 <= a1 {
        SpanRelation::AContainsB
    } else if b0 <= a0 && a1 <= b1 {
        SpanRelation::BContainsA
    } else {
        SpanRelation::PartialOverlap
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(s: u32, l: u32) -> SourceSpan {
        SourceSpan::new(s, l, 0)
    }

    #[test]
    fn touching_intervals_are_disjoint() {
        assert_eq!(span_relation(sp(0, 5), sp(5, 5)), SpanRelation::Disjoint);
    }

    #[test]
    fn containment_and_partial_overlap() {
        assert_eq!(
            span_relation(sp(10, 10), sp(12, 4)),
            SpanRelation::AContainsB
        );
        assert_eq!(
            span_relation(sp(12, 4), sp(10, 10)),
            SpanRelation::BContainsA
        );
        assert_eq!(
            span_relation(sp(10, 5), sp(12, 4)),
            SpanRelation::PartialOverlap
        );
    }

    #[test]
    fn different_files_never_overlap() {
        assert_eq!(
            span_relation(SourceSpan::new(0, 4, 0), SourceSpan::new(0, 4, 1)),
            SpanRelation::Disjoint
        );
    }

    // Brute-force oracle: compare byte sets of both intervals.
    #[test]
    fn exhaustive_small_spans_match_byte_set_oracle() {
        use std::collections::BTreeSet;
        for s1 in 0..8 {
            for l1 in 1..8 {
                for s2 in 0..8 {
                    for l2 in 1..8 {
                        let (a, b) = (sp(s1, l1), sp(s2, l2));
                        let sa: BTreeSet<u32> = (s1..s1 + l1).collect();
                        let sb: BTreeSet<u32> = (s2..s2 + l2).collect();
                        let expected = if sa == sb {
                            SpanRelation::Equal
                        } else if sa.is_disjoint(&sb) {
                            SpanRelation::Disjoint
                        } else if sb.is_subset(&sa) {
                            SpanRelation::AContainsB
                        } else if sa.is_subset(&sb) {
                            SpanRelation::BContainsA
                        } else {
                            SpanRelation::PartialOverlap
                        };
                        assert_eq!(span_relation(a, b), expected, "{a} vs {b}");
                        let swapped = match expected {
                            SpanRelation::AContainsB => SpanRelation::BContainsA,
                            SpanRelation::BContainsA => SpanRelation::AContainsB,
                            other => other,
                        };
                        assert_eq!(span_relation(b, a), swapped);
                    }
                }
            }
        }
    }

    #[test]
    fn parse_rejects_zero_length() {
        assert!("3:0:0".parse::<SourceSpan>().is_err());
        assert_eq!(
            "3:4:1".parse::<SourceSpan>().unwrap(),
            SourceSpan::new(3, 4, 1)
        );
    }

    #[test]
    fn line_col_counts_from_one() {
        let text = "ab\ncd";
        assert_eq!(SourceSpan::new(4, 1, 0).line_col(text), (2, 2));
    }
}
