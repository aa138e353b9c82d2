//! The legacy `s:l:f:j:m;...` source-map text format.
//!
//! Encoding omits the span triple as a unit when it repeats the previous entry's span,
//! and omits `j` / `m` individually when they repeat. Trailing empty fields are dropped.
//! Decoding accepts per-field omission of any field.

use thiserror::Error;

use super::table::{JumpType, LegacyEntry, MappingTable};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("malformed field {field:?} in entry {entry}")]
    MalformedField { entry: usize, field: String },
    #[error("entry {entry} omits field {position} with no previous entry to inherit from")]
    DanglingInheritance { entry: usize, position: usize },
}

pub fn encode_compressed(table: &MappingTable) -> String {
    encode_stream(&table.legacy_stream())
}

pub fn encode_stream(stream: &[LegacyEntry]) -> String {
    let mut out = String::new();
    let mut prev: Option<&LegacyEntry> = None;
    for (i, e) in stream.iter().enumerate() {
        if i > 0 {
            out.push(';');
        }
        let mut fields: [Option<String>; 5] = Default::default();
        let same_span =
            prev.is_some_and(|p| (p.start, p.length, p.file) == (e.start, e.length, e.file));
        if !same_span {
            fields[0] = Some(e.start.to_string());
            fields[1] = Some(e.length.to_string());
            fields[2] = Some(e.file.to_string());
        }
        if prev.map(|p| p.jump) != Some(e.jump) {
            fields[3] = Some(e.jump.as_char().to_string());
        }
        if prev.map(|p| p.modifier_depth) != Some(e.modifier_depth) {
            fields[4] = Some(e.modifier_depth.to_string());
        }
        let last = fields.iter().rposition(Option::is_some);
        if let Some(last) = last {
            let text: Vec<&str> = fields[..=last]
                .iter()
                .map(|f| f.as_deref().unwrap_or(""))
                .collect();
            out.push_str(&text.join(":"));
        }
        prev = Some(e);
    }
    out
}

pub fn decode_compressed(text: &str) -> Result<Vec<LegacyEntry>, CodecError> {
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let mut out: Vec<LegacyEntry> = Vec::new();
    for (idx, item) in text.split(';').enumerate() {
        let parts: Vec<&str> = if item.is_empty() {
            Vec::new()
        } else {
            item.split(':').collect()
        };
        if parts.len() > 5 {
            return Err(CodecError::MalformedField {
                entry: idx,
                field: item.to_string(),
            });
        }
        let prev = out.last().copied();
        let inherit = |position: usize| -> Result<LegacyEntry, CodecError> {
            prev.ok_or(CodecError::DanglingInheritance {
                entry: idx,
                position,
            })
        };
        let num = |position: usize| -> Result<Option<u32>, CodecError> {
            match parts.get(position) {
                Some(p) if !p.is_empty() => {
                    p.parse::<u32>()
                        .map(Some)
                        .map_err(|_| CodecError::MalformedField {
                            entry: idx,
                            field: (*p).to_string(),
                        })
                }
                _ => Ok(None),
            }
        };
        let start = match num(0)? {
            Some(v) => v,
            None => inherit(0)?.start,
        };
        let length = match num(1)? {
            Some(v) => v,
            None => inherit(1)?.length,
        };
        let file = match num(2)? {
            Some(v) => v,
            None => inherit(2)?.file,
        };
        let jump = match parts.get(3) {
            Some(p) if !p.is_empty() => {
                JumpType::from_char(p).ok_or_else(|| CodecError::MalformedField {
                    entry: idx,
                    field: (*p).to_string(),
                })?
            }
            _ => inherit(3)?.jump,
        };
        let modifier_depth = match num(4)? {
            Some(v) => v,
            None => inherit(4)?.modifier_depth,
        };
        out.push(LegacyEntry {
            start,
            length,
            file,
            jump,
            modifier_depth,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn le(start: u32, length: u32) -> LegacyEntry {
        LegacyEntry {
            start,
            length,
            file: 0,
            jump: JumpType::Regular,
            modifier_depth: 0,
        }
    }

    #[test]
    fn omits_repeated_jump_and_depth() {
        assert_eq!(
            encode_stream(&[le(0, 45), le(46, 30)]),
            "0:45:0:-:0;46:30:0"
        );
    }

    #[test]
    fn identical_entries_collapse_to_empty() {
        assert_eq!(encode_stream(&[le(0, 45), le(0, 45)]), "0:45:0:-:0;");
    }

    #[test]
    fn jump_change_keeps_positions() {
        let mut b = le(0, 45);
        b.jump = JumpType::Into;
        assert_eq!(encode_stream(&[le(0, 45), b]), "0:45:0:-:0;:::i");
    }

    #[test]
    fn decode_inherits_fields() {
        assert_eq!(
            decode_compressed("0:45:0:-:0;46:30:0").unwrap(),
            vec![le(0, 45), le(46, 30)]
        );
        assert_eq!(
            decode_compressed("0:45:0:-:0;:3").unwrap(),
            vec![le(0, 45), le(0, 3)]
        );
    }

    #[test]
    fn decode_errors() {
        assert!(matches!(
            decode_compressed(";"),
            Err(CodecError::DanglingInheritance { .. })
        ));
        assert!(matches!(
            decode_compressed("0:45:0:x:0"),
            Err(CodecError::MalformedField { .. })
        ));
        assert!(matches!(
            decode_compressed("a:45:0:-:0"),
            Err(CodecError::MalformedField { .. })
        ));
        assert!(matches!(
            decode_compressed("1:2:3:-:0:9"),
            Err(CodecError::MalformedField { .. })
        ));
    }

    #[test]
    fn empty_table_is_empty_text() {
        assert_eq!(encode_compressed(&MappingTable::default()), "");
        assert!(decode_compressed("").unwrap().is_empty());
    }
}
