#![allow(dead_code)]

use rand::Rng;
use zkmap::model::{Confidence, FileInfo, JumpType, MappingEntry, MappingTable, SourceSpan};

/// A random well-formed table: sorted unique offsets, spans inside their file.
pub fn random_table<R: Rng>(rng: &mut R) -> MappingTable {
    let files: Vec<FileInfo> = (0..rng.gen_range(1..=3))
        .map(|i| FileInfo {
            name: format!("f{i}.msol"),
            length: rng.gen_range(1..5000),
        })
        .collect();
    let mut offset = 0u32;
    let entries = (0..rng.gen_range(0..200))
        .map(|i| {
            offset += rng.gen_range(1..12);
            let file = rng.gen_range(0..files.len() as u32);
            let flen = files[file as usize].length;
            let start = rng.gen_range(0..flen);
            let length = rng.gen_range(1..=flen - start);
            MappingEntry {
                span: SourceSpan::new(start, length, file),
                ir_id: i,
                offset,
                jump: [JumpType::Regular, JumpType::Into, JumpType::OutOf][rng.gen_range(0..3)],
                modifier_depth: rng.gen_range(0..4),
                zk_constraint: rng.gen_bool(0.2).then(|| rng.gen_range(1..20)),
                confidence: [Confidence::Exact, Confidence::Approximate][rng.gen_range(0..2)],
            }
        })
        .collect();
    MappingTable {
        entries,
        files,
        synthetic_excluded: rng.gen_range(0..10),
    }
}
