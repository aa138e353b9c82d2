use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::backend::{decode, BytecodeProgram, Opcode};
use crate::frontend::StatementRegistry;
use crate::ir::IrModule;
use crate::model::{span_relation, JumpType, MappingTable, SourceSpan, SpanRelation, StatementId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    DuplicateOffset {
        offset: u32,
    },
    UnsortedOffset {
        offset: u32,
        previous: u32,
    },
    PartialOverlap {
        offset_a: u32,
        span_a: SourceSpan,
        offset_b: u32,
        span_b: SourceSpan,
    },
    InvalidSpan {
        offset: u32,
        span: SourceSpan,
    },
    UnregisteredSpan {
        offset: u32,
        span: SourceSpan,
    },
    DanglingIrId {
        offset: u32,
        ir_id: u32,
    },
    SpanMismatch {
        offset: u32,
        ir_id: u32,
        expected: Option<SourceSpan>,
        found: SourceSpan,
    },
    ControlFlow {
        offset: u32,
        from: StatementId,
        to: StatementId,
    },
    UnpairedJump {
        offset: u32,
        jump: JumpType,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sp = |s: &SourceSpan| format!("{}:{}:{}", s.start, s.length, s.file);
        match self {
            Violation::DuplicateOffset { offset } => write!(f, "offset {offset:#06x} mapped twice"),
            Violation::UnsortedOffset { offset, previous } => {
                write!(f, "offset {offset:#06x} follows {previous:#06x}")
            }
            Violation::PartialOverlap {
                offset_a,
                span_a,
                offset_b,
                span_b,
            } => write!(
                f,
                "spans {} @{offset_a:#06x} and {} @{offset_b:#06x} partially overlap",
                sp(span_a),
                sp(span_b)
            ),
            Violation::InvalidSpan { offset, span } => {
                write!(f, "span {} @{offset:#06x} is out of bounds", sp(span))
            }
            Violation::UnregisteredSpan { offset, span } => {
                write!(
                    f,
                    "span {} @{offset:#06x} is not a registered source construct",
                    sp(span)
                )
            }
            Violation::DanglingIrId { offset, ir_id } => {
                write!(
                    f,
                    "entry @{offset:#06x} references eliminated ir_id %{ir_id}"
                )
            }
            Violation::SpanMismatch {
                offset,
                ir_id,
                expected,
                found,
            } => write!(
                f,
                "entry @{offset:#06x} maps %{ir_id} to {} but the instruction carries {}",
                sp(found),
                expected.as_ref().map_or("no span".to_string(), sp)
            ),
            Violation::ControlFlow { offset, from, to } => write!(
                f,
                "entry @{offset:#06x}: statement #{to} is unreachable from #{from} and vice versa"
            ),
            Violation::UnpairedJump { offset, jump } => {
                write!(f, "jump-{jump} entry @{offset:#06x} has no partner")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub checked: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn merge(mut self, other: ValidationReport) -> ValidationReport {
        self.checked = self.checked.max(other.checked);
        self.violations.extend(other.violations);
        self
    }
}

/// Offset order and uniqueness, span bounds, and the no-partial-overlap rule over distinct spans.
pub fn validate_syntactic(table: &MappingTable) -> ValidationReport {
    let mut r = ValidationReport {
        checked: table.len(),
        ..Default::default()
    };
    let lengths = table.file_lengths();
    let mut seen = BTreeSet::new();
    for (i, e) in table.entries.iter().enumerate() {
        if !seen.insert(e.offset) {
            r.violations
                .push(Violation::DuplicateOffset { offset: e.offset });
        } else if i > 0 && table.entries[i - 1].offset > e.offset {
            r.violations.push(Violation::UnsortedOffset {
                offset: e.offset,
                previous: table.entries[i - 1].offset,
            });
        }
        if !e.span.is_valid_in(&lengths) {
            r.violations.push(Violation::InvalidSpan {
                offset: e.offset,
                span: e.span,
            });
        }
    }
    let mut distinct: BTreeMap<SourceSpan, u32> = BTreeMap::new();
    for e in &table.entries {
        distinct.entry(e.span).or_insert(e.offset);
    }
    // Sorted by file then start: once a later span starts at or after this one's end, nothing further can overlap it.
    let mut spans: Vec<(SourceSpan, u32)> = distinct.into_iter().collect();
    spans.sort_by_key(|(s, _)| (s.file, s.start, s.length));
    for (i, (a, oa)) in spans.iter().enumerate() {
        for (b, ob) in &spans[i + 1..] {
            if b.file != a.file || b.start >= a.end() {
                break;
            }
            if span_relation(*a, *b) == SpanRelation::PartialOverlap {
                r.violations.push(Violation::PartialOverlap {
                    offset_a: *oa,
                    span_a: *a,
                    offset_b: *ob,
                    span_b: *b,
                });
            }
        }
    }
    r
}

/// Registry membership, IR liveness, per-block statement reachability, and call/return pairing.
pub fn validate_structural(
    table: &MappingTable,
    reg: &StatementRegistry,
    m: &IrModule,
    program: &BytecodeProgram,
) -> ValidationReport {
    let mut r = ValidationReport {
        checked: table.len(),
        ..Default::default()
    };
    let index = m.instr_index();
    for e in &table.entries {
        if !reg.spans.contains(&e.span) {
            r.violations.push(Violation::UnregisteredSpan {
                offset: e.offset,
                span: e.span,
            });
        }
        match index.get(&e.ir_id) {
            None => r.violations.push(Violation::DanglingIrId {
                offset: e.offset,
                ir_id: e.ir_id,
            }),
            Some(i) if i.prov.primary_span != Some(e.span) => {
                r.violations.push(Violation::SpanMismatch {
                    offset: e.offset,
                    ir_id: e.ir_id,
                    expected: i.prov.primary_span,
                    found: e.span,
                })
            }
            Some(_) => {}
        }
    }

    let insns = decode(&program.code).unwrap_or_default();
    // Bytecode basic block of every instruction start.
    let mut block_of: BTreeMap<u32, usize> = BTreeMap::new();
    let mut block = 0usize;
    let mut prev_ends = false;
    for (off, insn) in &insns {
        if insn.op == Opcode::JUMPDEST || prev_ends {
            block += 1;
        }
        block_of.insert(*off, block);
        prev_ends = insn.op.is_halt_or_jump() || insn.op == Opcode::JUMPI;
    }
    let mut last: Option<(usize, StatementId)> = None;
    for e in &table.entries {
        let Some(stmt) = reg.statement_of_span(e.span) else {
            continue;
        };
        let b = block_of.get(&e.offset).copied();
        if let (Some(b), Some((pb, ps))) = (b, last) {
            if b == pb && ps != stmt && !reg.reaches(ps, stmt) && !reg.reaches(stmt, ps) {
                r.violations.push(Violation::ControlFlow {
                    offset: e.offset,
                    from: ps,
                    to: stmt,
                });
            }
        }
        last = b.map(|b| (b, stmt));
    }

    r.violations
        .extend(check_call_pairs(table, program, &insns));
    r
}

fn check_call_pairs(
    table: &MappingTable,
    program: &BytecodeProgram,
    insns: &[(u32, crate::backend::Insn)],
) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut by_start: Vec<&crate::backend::FunctionEntry> = program.functions.iter().collect();
    by_start.sort_by_key(|f| f.offset);
    let starts: Vec<u32> = by_start.iter().map(|f| f.offset).collect();
    let function_at = |off: u32| starts.iter().rposition(|s| *s <= off);
    let pos: BTreeMap<u32, usize> = insns
        .iter()
        .enumerate()
        .map(|(k, (o, _))| (*o, k))
        .collect();
    let mut called: BTreeSet<usize> = BTreeSet::new();
    let mut returning: BTreeSet<usize> = BTreeSet::new();
    let mut outs: Vec<(u32, usize)> = Vec::new();
    for e in &table.entries {
        match e.jump {
            JumpType::Into => {
                let k = pos.get(&e.offset).copied();
                let target = k.and_then(|k| k.checked_sub(1)).map(|k| insns[k].1);
                let resumes = k
                    .and_then(|k| insns.get(k + 1))
                    .is_some_and(|(_, i)| i.op == Opcode::JUMPDEST);
                match target {
                    Some(t)
                        if t.op == Opcode::PUSH && resumes && starts.contains(&(t.a as u32)) =>
                    {
                        called.insert(function_at(t.a as u32).unwrap());
                    }
                    _ => out.push(Violation::UnpairedJump {
                        offset: e.offset,
                        jump: e.jump,
                    }),
                }
            }
            JumpType::OutOf => {
                if let Some(f) = function_at(e.offset) {
                    returning.insert(f);
                    outs.push((e.offset, f));
                }
            }
            JumpType::Regular => {}
        }
    }
    // Returning only makes sense from an internal function; uncalled internal functions are dead code, not a fault.
    for (offset, f) in outs {
        if by_start[f].external {
            out.push(Violation::UnpairedJump {
                offset,
                jump: JumpType::OutOf,
            });
        }
    }
    for f in called.difference(&returning) {
        out.push(Violation::UnpairedJump {
            offset: starts[*f],
            jump: JumpType::Into,
        });
    }
    out
}
