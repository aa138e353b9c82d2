use serde::{Deserialize, Serialize};

use crate::model::{
    encode_compressed, Confidence, FileInfo, JumpType, MappingEntry, MappingTable, SourceSpan,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RichEntry {
    pub s: u32,
    pub l: u32,
    pub f: u32,
    pub ir_id: u32,
    pub offset: u32,
    pub jump: JumpType,
    pub modifier_depth: u32,
    pub zk_constraint: Option<u32>,
    pub confidence: Confidence,
}

/// The rich source-map document.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RichSourceMap {
    pub files: Vec<FileInfo>,
    pub entries: Vec<RichEntry>,
    pub synthetic_excluded: u32,
}

impl From<&MappingTable> for RichSourceMap {
    fn from(t: &MappingTable) -> Self {
        RichSourceMap {
            files: t.files.clone(),
            entries: t
                .entries
                .iter()
                .map(|e| RichEntry {
                    s: e.span.start,
                    l: e.span.length,
                    f: e.span.file,
                    ir_id: e.ir_id,
                    offset: e.offset,
                    jump: e.jump,
                    modifier_depth: e.modifier_depth,
                    zk_constraint: e.zk_constraint,
                    confidence: e.confidence,
                })
                .collect(),
            synthetic_excluded: t.synthetic_excluded,
        }
    }
}

impl From<RichSourceMap> for MappingTable {
    fn from(r: RichSourceMap) -> Self {
        MappingTable {
            files: r.files,
            entries: r
                .entries
                .into_iter()
                .map(|e| MappingEntry {
                    span: SourceSpan::new(e.s, e.l, e.f),
                    ir_id: e.ir_id,
                    offset: e.offset,
                    jump: e.jump,
                    modifier_depth: e.modifier_depth,
                    zk_constraint: e.zk_constraint,
                    confidence: e.confidence,
                })
                .collect(),
            synthetic_excluded: r.synthetic_excluded,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Rich,
    Compressed,
}

pub fn export(table: &MappingTable, format: ExportFormat) -> String {
    match format {
        ExportFormat::Rich => serde_json::to_string_pretty(&RichSourceMap::from(table))
            .expect("plain data serializes"),
        ExportFormat::Compressed => encode_compressed(table),
    }
}

pub fn import_rich(text: &str) -> Result<MappingTable, serde_json::Error> {
    serde_json::from_str::<RichSourceMap>(text).map(MappingTable::from)
}
