//! Mapping table construction, queries, validation, export and fault injection.

mod build;
mod export;
mod fault;
mod validate;

pub use build::{build_table, query_offset, query_span, MapgenError};
pub use export::{export, import_rich, ExportFormat, RichEntry, RichSourceMap};
pub use fault::{inject_fault, FaultKind};
pub use validate::{validate_structural, validate_syntactic, ValidationReport, Violation};

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::backend::{emit, BytecodeProgram};
    use crate::frontend::{analyze, build_statement_registry, StatementRegistry};
    use crate::ir::IrModule;
    use crate::lowering::{lower, LowerOptions};
    use crate::model::{Confidence, FileInfo, MappingTable, SourceSpan};
    use crate::optimizer::{run_pipeline, PassConfig};

    const VOTING: &str = "contract ZKVoting {
    mapping(address => bool) hasVoted;
    uint count;
    function submitVote(uint zkProof) external {
        require(verifyZKProof(zkProof), \"Invalid proof\");
        require(!hasVoted[msg.sender], \"Already voted\");
        hasVoted[msg.sender] = true;
        count = count + (zkProof & 1);
    }
    function verifyZKProof(uint zkProof) internal returns (bool) {
        return zkProof != 0;
    }
}
";

    struct Built {
        table: MappingTable,
        reg: StatementRegistry,
        module: IrModule,
        program: BytecodeProgram,
    }

    fn build(src: &str, config: &PassConfig) -> Built {
        let unit = analyze(src, 0).unwrap();
        let reg = build_statement_registry(&unit);
        let m = lower(&unit, &reg, LowerOptions::default()).unwrap();
        let out = run_pipeline(m, config, &reg.spans).unwrap();
        let (program, log) = emit(&out.module).unwrap();
        let files = vec![FileInfo {
            name: "voting.sol".into(),
            length: src.len() as u32,
        }];
        let table = build_table(&log, &out.module, files).unwrap();
        assert_eq!(table.len() + table.synthetic_excluded as usize, log.len());
        Built {
            table,
            reg,
            module: out.module,
            program,
        }
    }

    #[test]
    fn require_entry_carries_constraint() {
        let b = build(VOTING, &PassConfig::default());
        let req = b
            .table
            .entries
            .iter()
            .find(|e| e.zk_constraint == Some(1))
            .expect("constraint 1 mapped");
        assert!(req
            .span
            .snippet(VOTING)
            .starts_with("require(verifyZKProof"));
        let store = b
            .table
            .entries
            .iter()
            .find(|e| e.span.snippet(VOTING) == "hasVoted[msg.sender] = true;")
            .unwrap();
        assert_eq!(store.zk_constraint, None);
        let hit = query_offset(&b.table, &b.program.code, req.offset)
            .unwrap()
            .unwrap();
        assert_eq!(hit, req);
        assert!(query_offset(&b.table, &b.program.code, b.program.code.len() as u32).is_err());
        assert!(query_span(&b.table, req.span).contains(&req.offset));
        assert!(query_span(&b.table, SourceSpan::new(0, 5, 9)).is_empty());
    }

    #[test]
    fn honest_tables_validate() {
        for config in [PassConfig::none(), PassConfig::default()] {
            let b = build(VOTING, &config);
            let r = validate_syntactic(&b.table)
                .merge(validate_structural(&b.table, &b.reg, &b.module, &b.program));
            assert!(r.is_clean(), "{:?}", r.violations);
            assert!(b
                .table
                .entries
                .iter()
                .all(|e| e.confidence != Confidence::Synthetic));
        }
    }

    #[test]
    fn partial_overlap_is_reported() {
        let mut t = build(VOTING, &PassConfig::none()).table;
        t.entries[0].span = SourceSpan::new(10, 5, 0);
        t.entries[1].span = SourceSpan::new(12, 4, 0);
        let r = validate_syntactic(&t);
        assert!(r
            .violations
            .iter()
            .any(|v| matches!(v, Violation::PartialOverlap { .. })));
    }

    #[test]
    fn every_fault_is_caught() {
        let b = build(VOTING, &PassConfig::default());
        for kind in FaultKind::ALL {
            for seed in 0..20 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let bad =
                    inject_fault(&b.table, kind, &b.reg.spans, b.module.next_id, &mut rng).unwrap();
                let r = validate_syntactic(&bad)
                    .merge(validate_structural(&bad, &b.reg, &b.module, &b.program));
                assert!(!r.is_clean(), "{kind} seed {seed} slipped through");
            }
        }
    }

    #[test]
    fn rich_round_trip_and_empty() {
        let b = build(VOTING, &PassConfig::default());
        let text = export(&b.table, ExportFormat::Rich);
        assert_eq!(import_rich(&text).unwrap(), b.table);
        let empty = MappingTable::default();
        assert!(export(&empty, ExportFormat::Rich).contains("\"entries\": []"));
        assert_eq!(export(&empty, ExportFormat::Compressed), "");
    }
}
