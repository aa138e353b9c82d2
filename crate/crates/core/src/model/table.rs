use std::fmt;

use serde::{Deserialize, Serialize};

use super::provenance::Confidence;
use super::span::SourceSpan;

/// Jump annotation of a bytecode instruction, solc style.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum JumpType {
    #[serde(rename = "i")]
    Into,
    #[serde(rename = "o")]
    OutOf,
    #[default]
    #[serde(rename = "-")]
    Regular,
}

impl JumpType {
    pub fn as_char(self) -> char {
        match self {
            JumpType::Into => 'i',
            JumpType::OutOf => 'o',
            JumpType::Regular => '-',
        }
    }

    pub fn from_char(c: &str) -> Option<Self> {
        match c {
            "i" => Some(JumpType::Into),
            "o" => Some(JumpType::OutOf),
            "-" => Some(JumpType::Regular),
            _ => None,
        }
    }
}

impl fmt::Display for JumpType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// One `(s, l, f, I, B)` record plus metadata.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MappingEntry {
    pub span: SourceSpan,
    pub ir_id: u32,
    pub offset: u32,
    pub jump: JumpType,
    pub modifier_depth: u32,
    pub zk_constraint: Option<u32>,
    pub confidence: Confidence,
}

/// A source file of the compilation unit as the table sees it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FileInfo {
    pub name: String,
    pub length: u32,
}

/// Offset-sorted mapping table.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MappingTable {
    pub entries: Vec<MappingEntry>,
    pub files: Vec<FileInfo>,
    /// Logged bytecode instructions that were left unmapped because their IR origin is synthetic.
    pub synthetic_excluded: u32,
}

impl MappingTable {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn file_lengths(&self) -> Vec<u32> {
        self.files.iter().map(|f| f.length).collect()
    }

    /// Exact lookup by instruction start offset.
    pub fn entry_at(&self, offset: u32) -> Option<&MappingEntry> {
        self.entries
            .binary_search_by_key(&offset, |e| e.offset)
            .ok()
            .map(|i| &self.entries[i])
    }

    /// The `(s, l, f, j, m)` projection carried by the compressed format.
    pub fn legacy_stream(&self) -> Vec<LegacyEntry> {
        self.entries
            .iter()
            .map(|e| LegacyEntry {
                start: e.span.start,
                length: e.span.length,
                file: e.span.file,
                jump: e.jump,
                modifier_depth: e.modifier_depth,
            })
            .collect()
    }
}

/// One decoded element of a compressed source map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LegacyEntry {
    pub start: u32,
    pub length: u32,
    pub file: u32,
    pub jump: JumpType,
    pub modifier_depth: u32,
}
