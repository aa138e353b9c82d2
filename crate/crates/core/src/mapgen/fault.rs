use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::model::{MappingTable, SourceSpan, SpanSet};

/// Mutation operators used to check that the validators catch corrupted tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultKind {
    SpanShift,
    SpanSwap,
    OffsetDuplication,
    ForeignSpan,
    DanglingIrId,
}

impl FaultKind {
    pub const ALL: [FaultKind; 5] = [
        FaultKind::SpanShift,
        FaultKind::SpanSwap,
        FaultKind::OffsetDuplication,
        FaultKind::ForeignSpan,
        FaultKind::DanglingIrId,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FaultKind::SpanShift => "span_shift",
            FaultKind::SpanSwap => "span_swap",
            FaultKind::OffsetDuplication => "offset_duplication",
            FaultKind::ForeignSpan => "foreign_span",
            FaultKind::DanglingIrId => "dangling_ir_id",
        }
    }
}

impl fmt::Display for FaultKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Returns a mutated copy of `table`, or `None` when the table is too small for the operator.
pub fn inject_fault<R: Rng>(
    table: &MappingTable,
    kind: FaultKind,
    registered: &SpanSet,
    next_ir_id: u32,
    rng: &mut R,
) -> Option<MappingTable> {
    let mut t = table.clone();
    let n = t.entries.len();
    if n == 0 {
        return None;
    }
    let lengths = t.file_lengths();
    match kind {
        FaultKind::SpanShift => {
            let i = rng.gen_range(0..n);
            let s = t.entries[i].span;
            let mut delta: i64 = rng.gen_range(1..=3);
            if rng.gen_bool(0.5) && s.start as i64 >= delta {
                delta = -delta;
            }
            t.entries[i].span = SourceSpan::new((s.start as i64 + delta) as u32, s.length, s.file);
        }
        FaultKind::SpanSwap => {
            let pairs: Vec<(usize, usize)> = (0..n)
                .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
                .filter(|(a, b)| table.entries[*a].span != table.entries[*b].span)
                .collect();
            let &(a, b) = pairs.choose(rng)?;
            let sa = t.entries[a].span;
            t.entries[a].span = t.entries[b].span;
            t.entries[b].span = sa;
        }
        FaultKind::OffsetDuplication => {
            if n < 2 {
                return None;
            }
            let i = rng.gen_range(1..n);
            t.entries[i].offset = t.entries[i - 1].offset;
        }
        FaultKind::ForeignSpan => {
            let i = rng.gen_range(0..n);
            let file = t.entries[i].span.file;
            let len = *lengths.get(file as usize)?;
            let span = (0..1000).find_map(|_| {
                let start = rng.gen_range(0..len);
                let length = rng.gen_range(1..=(len - start).min(12));
                let s = SourceSpan::new(start, length, file);
                (!registered.contains(&s)).then_some(s)
            })?;
            t.entries[i].span = span;
        }
        FaultKind::DanglingIrId => {
            let i = rng.gen_range(0..n);
            t.entries[i].ir_id = next_ir_id + rng.gen_range(0..1000);
        }
    }
    Some(t)
}
