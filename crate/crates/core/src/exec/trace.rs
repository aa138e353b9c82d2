use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::frontend::StatementRegistry;
use crate::model::{MappingTable, SourceSpan, StatementId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error(
        "executed offset {offset:#06x} lies outside the {len}-byte program the table describes"
    )]
    TableMismatch { offset: u32, len: usize },
}

/// A maximal run of executed instructions attributed to one statement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceRecord {
    pub statement: StatementId,
    pub span: SourceSpan,
    pub zk_constraint: Option<u32>,
    /// Executed instructions in the run.
    pub instructions: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ReconstructedTrace {
    pub records: Vec<TraceRecord>,
    /// Executed instructions with a mapping entry that resolves to a statement.
    pub mapped: usize,
    /// Executed instructions with no entry, or whose span lies outside every statement.
    pub unmapped: usize,
}

impl ReconstructedTrace {
    pub fn statements(&self) -> Vec<StatementId> {
        self.records.iter().map(|r| r.statement).collect()
    }
}

/// Lifts a VM offset trace to statement granularity through the mapping table.
pub fn reconstruct(
    table: &MappingTable,
    reg: &StatementRegistry,
    code_len: usize,
    offsets: &[u32],
) -> Result<ReconstructedTrace, TraceError> {
    let mut out = ReconstructedTrace::default();
    let mut cache: HashMap<SourceSpan, Option<StatementId>> = HashMap::new();
    for &off in offsets {
        if off as usize >= code_len {
            return Err(TraceError::TableMismatch {
                offset: off,
                len: code_len,
            });
        }
        let Some(e) = table.entry_at(off) else {
            out.unmapped += 1;
            continue;
        };
        let stmt = *cache
            .entry(e.span)
            .or_insert_with(|| reg.statement_of_span(e.span));
        let Some(stmt) = stmt else {
            out.unmapped += 1;
            continue;
        };
        out.mapped += 1;
        match out.records.last_mut() {
            Some(r) if r.statement == stmt => {
                r.instructions += 1;
                if r.zk_constraint.is_none() {
                    r.zk_constraint = e.zk_constraint;
                }
            }
            _ => out.records.push(TraceRecord {
                statement: stmt,
                span: reg.span(stmt).unwrap_or(e.span),
                zk_constraint: e.zk_constraint,
                instructions: 1,
            }),
        }
    }
    Ok(out)
}

/// Drops consecutive repeats.
pub fn collapse(trace: &[StatementId]) -> Vec<StatementId> {
    let mut out: Vec<StatementId> = Vec::with_capacity(trace.len());
    for &s in trace {
        if out.last() != Some(&s) {
            out.push(s);
        }
    }
    out
}
