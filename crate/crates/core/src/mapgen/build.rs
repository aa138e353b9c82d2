use thiserror::Error;

use crate::backend::{decode, OffsetLog};
use crate::ir::IrModule;
use crate::model::{
    span_relation, Confidence, FileInfo, MappingEntry, MappingTable, SourceSpan, SpanRelation,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MapgenError {
    #[error(
        "offset log entry {offset:#06x} references ir_id %{ir_id}, which is not in the final IR"
    )]
    DanglingIrId { offset: u32, ir_id: u32 },
    #[error("offset {offset:#x} is outside the code ({code_len} bytes)")]
    OffsetOutOfRange { offset: u32, code_len: usize },
}

/// Joins the offset log with instruction provenance. Synthetic or spanless instructions are counted, not mapped.
pub fn build_table(
    log: &OffsetLog,
    m: &IrModule,
    files: Vec<FileInfo>,
) -> Result<MappingTable, MapgenError> {
    let index = m.instr_index();
    let mut table = MappingTable {
        files,
        ..Default::default()
    };
    for rec in &log.entries {
        let instr = index.get(&rec.ir_id).ok_or(MapgenError::DanglingIrId {
            offset: rec.offset,
            ir_id: rec.ir_id,
        })?;
        match instr.prov.primary_span {
            Some(span) if instr.prov.confidence != Confidence::Synthetic => {
                table.entries.push(MappingEntry {
                    span,
                    ir_id: rec.ir_id,
                    offset: rec.offset,
                    jump: rec.jump,
                    modifier_depth: instr.modifier_depth,
                    zk_constraint: instr.prov.zk_constraint,
                    confidence: instr.prov.confidence,
                })
            }
            _ => table.synthetic_excluded += 1,
        }
    }
    table.entries.sort_by_key(|e| e.offset);
    Ok(table)
}

/// The entry of the instruction covering `offset`, if that instruction is mapped.
pub fn query_offset<'a>(
    table: &'a MappingTable,
    code: &[u8],
    offset: u32,
) -> Result<Option<&'a MappingEntry>, MapgenError> {
    let out_of_range = MapgenError::OffsetOutOfRange {
        offset,
        code_len: code.len(),
    };
    if offset as usize >= code.len() {
        return Err(out_of_range);
    }
    let start = match decode(code) {
        Ok(insns) => insns
            .iter()
            .map(|(o, _)| *o)
            .take_while(|o| *o <= offset)
            .last()
            .unwrap_or(0),
        Err(_) => offset,
    };
    Ok(table.entry_at(start))
}

/// Offsets whose span equals, contains, or lies inside `span`, ascending.
pub fn query_span(table: &MappingTable, span: SourceSpan) -> Vec<u32> {
    table
        .entries
        .iter()
        .filter(|e| {
            e.span.file == span.file
                && matches!(
                    span_relation(e.span, span),
                    SpanRelation::Equal | SpanRelation::AContainsB | SpanRelation::BContainsA
                )
        })
        .map(|e| e.offset)
        .collect()
}
