//! Lowering from the resolved AST to SSA IR.

mod build;
mod constraints;
mod typeck;

pub use build::{lower_unit, remove_trivial_phis, LowerOptions, DIV_ZERO_MESSAGE};
pub use constraints::assign_constraint_indices;
pub use typeck::{always_returns, typecheck, TypeError};

use crate::frontend::{ResolvedUnit, StatementRegistry};
use crate::ir::IrModule;

/// Type-checks, lowers and numbers the constraints of one unit.
pub fn lower(
    unit: &ResolvedUnit,
    reg: &StatementRegistry,
    opts: LowerOptions,
) -> Result<IrModule, TypeError> {
    typecheck(unit)?;
    let mut m = lower_unit(unit, reg, opts);
    assign_constraint_indices(&mut m);
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{analyze, build_statement_registry};
    use crate::ir::{check_module, dump_module, BinOp, BranchOrigin, CmpOp, Op};
    use crate::model::Confidence;

    pub(crate) const VOTING: &str = "contract ZKVoting {
    mapping(address => bool) hasVoted;

    function submitVote(uint zkProof) external {
        require(verifyZKProof(zkProof), \"Invalid proof\");
        require(!hasVoted[msg.sender], \"Already voted\");

        hasVoted[msg.sender] = true;
    }

    function verifyZKProof(uint zkProof) internal returns (bool) {
        return zkProof != 0;
    }
}
";

    fn build(src: &str) -> (crate::frontend::ResolvedUnit, StatementRegistry, IrModule) {
        let unit = analyze(src, 0).unwrap();
        let reg = build_statement_registry(&unit);
        let m = lower(&unit, &reg, LowerOptions::default()).unwrap();
        check_module(&m).unwrap_or_else(|e| panic!("{e}\n{}", dump_module(&m)));
        (unit, reg, m)
    }

    #[test]
    fn voting_shape() {
        let (_, _, m) = build(VOTING);
        let f = &m.functions[0];
        let ops: Vec<&Op> = f.instrs().map(|i| &i.op).collect();
        assert!(ops.iter().any(|op| matches!(op, Op::Call { func: 1, .. })));
        assert!(ops
            .iter()
            .any(|op| matches!(op, Op::StoreKey { slot: 0, .. })));
        let indices: Vec<u32> = f
            .instrs()
            .filter_map(|i| match i.op {
                Op::Branch {
                    origin: BranchOrigin::Require(k),
                    ..
                } => Some(k),
                _ => None,
            })
            .collect();
        assert_eq!(indices, vec![1, 2]);
        let call = f
            .instrs()
            .find(|i| matches!(i.op, Op::Call { .. }))
            .unwrap();
        assert_eq!(call.jump, crate::model::JumpType::Into);
    }

    #[test]
    fn check_bit_shares_statement() {
        let src = "contract B { function checkBit(uint input) external returns (bool) { return (input & 1) == 1; } }";
        let (_, reg, m) = build(src);
        let ret = src.find("return (").unwrap() as u32;
        let sid = *reg
            .statements
            .iter()
            .find(|(_, s)| s.span.start == ret)
            .unwrap()
            .0;
        let f = &m.functions[0];
        let and = f
            .instrs()
            .find(|i| matches!(i.op, Op::Binary(BinOp::And, ..)))
            .unwrap();
        let eq = f
            .instrs()
            .find(|i| matches!(i.op, Op::Cmp(CmpOp::Eq, ..)))
            .unwrap();
        assert_eq!(and.prov.statement_id, Some(sid));
        assert_eq!(eq.prov.statement_id, Some(sid));
        assert_eq!(and.prov.primary_span.unwrap().snippet(src), "(input & 1)");
        assert_eq!(
            eq.prov.primary_span.unwrap().snippet(src),
            "(input & 1) == 1"
        );
    }

    #[test]
    fn modifier_depths() {
        let src = "contract O { bool done; modifier onlyOnce { require(!done); _; } \
                   function f() onlyOnce external { done = true; } }";
        let (_, _, m) = build(src);
        let f = &m.functions[0];
        let req = f
            .instrs()
            .find(|i| matches!(i.op, Op::Branch { .. }))
            .unwrap();
        let store = f
            .instrs()
            .find(|i| matches!(i.op, Op::StoreState { .. }))
            .unwrap();
        assert_eq!(req.modifier_depth, 1);
        assert_eq!(store.modifier_depth, 0);
    }

    #[test]
    fn provenance_completeness() {
        let src = "contract P { uint t; event E(uint v);
            modifier m(uint k) { require(k > 0, \"k\"); _; t = t + k; }
            function g(uint a) internal returns (uint) { if (a > 3 && a < 9) { return a / 2; } return a; }
            function f(uint x) m(x) external returns (uint) {
                uint s = 0;
                for (uint i = 0; i < x; i = i + 1) { s = s + g(i); }
                while (s > 100) { s = s - 7; }
                emit E(s);
                return s;
            } }";
        let (_, reg, m) = build(src);
        for i in m.instrs() {
            if matches!(i.op, Op::Phi(_)) {
                assert_eq!(i.prov.confidence, Confidence::Approximate);
                continue;
            }
            assert_eq!(i.prov.confidence, Confidence::Exact, "{:?}", i);
            assert!(i.prov.statement_id.is_some());
            assert!(reg.spans.contains(&i.prov.primary_span.unwrap()), "{:?}", i);
        }
        let referenced: std::collections::BTreeSet<_> =
            m.instrs().filter_map(|i| i.prov.statement_id).collect();
        for id in reg.statements.keys() {
            assert!(referenced.contains(id), "statement {id} has no instruction");
        }
    }

    #[test]
    fn indices_idempotent_and_absent_without_require() {
        let (_, _, mut m) = build(VOTING);
        let before = dump_module(&m);
        assign_constraint_indices(&mut m);
        assert_eq!(before, dump_module(&m));
        let (_, _, m) = build("contract N { uint a; function f() external { a = 1; } }");
        assert!(m.instrs().all(|i| i.prov.zk_constraint.is_none()));
    }

    #[test]
    fn provenance_off_is_bare() {
        let unit = analyze(VOTING, 0).unwrap();
        let reg = build_statement_registry(&unit);
        let m = lower(&unit, &reg, LowerOptions { provenance: false }).unwrap();
        check_module(&m).unwrap();
        assert!(m.instrs().all(|i| i.prov.primary_span.is_none()));
    }
}
