use std::collections::BTreeMap;

use super::PassCtx;
use crate::ir::{BranchOrigin, Instr, IrModule, Op};
use crate::model::{JumpType, Provenance};

/// Inserts a constraint marker in front of every require branch and after every bitwise operation.
///
/// Require markers reuse the branch provenance and stay mapped; bitwise markers are
/// synthetic gadgets numbered after the last require index of their contract.
pub fn zk_instrument(m: &mut IrModule, ctx: &PassCtx) -> usize {
    let mut next: BTreeMap<usize, u32> = BTreeMap::new();
    for f in &m.functions {
        let n = next.entry(f.contract).or_insert(0);
        for i in f.instrs() {
            if let Op::Branch {
                origin: BranchOrigin::Require(k),
                ..
            } = i.op
            {
                *n = (*n).max(k);
            }
        }
    }
    for fi in 0..m.functions.len() {
        let contract = m.functions[fi].contract;
        for bi in 0..m.functions[fi].blocks.len() {
            let old = std::mem::take(&mut m.functions[fi].blocks[bi].instrs);
            let mut out = Vec::with_capacity(old.len());
            for i in old {
                match i.op {
                    Op::Branch {
                        origin: BranchOrigin::Require(k),
                        ..
                    } => {
                        let prov = if ctx.mapping {
                            i.prov.clone()
                        } else {
                            Provenance::default()
                        };
                        out.push(Instr {
                            id: m.fresh_id(),
                            op: Op::ZkConstraint { index: k },
                            prov,
                            jump: JumpType::Regular,
                            modifier_depth: i.modifier_depth,
                        });
                        out.push(i);
                    }
                    Op::Binary(op, ..) if op.is_bitwise() => {
                        let n = next.entry(contract).or_insert(0);
                        *n += 1;
                        let index = *n;
                        let depth = i.modifier_depth;
                        out.push(i);
                        out.push(Instr {
                            id: m.fresh_id(),
                            op: Op::ZkConstraint { index },
                            prov: Provenance::synthetic(),
                            jump: JumpType::Regular,
                            modifier_depth: depth,
                        });
                    }
                    _ => out.push(i),
                }
            }
            m.functions[fi].blocks[bi].instrs = out;
        }
    }
    0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{analyze, build_statement_registry};
    use crate::ir::check_module;
    use crate::lowering::{lower, LowerOptions};
    use crate::model::Confidence;

    fn instrumented(src: &str) -> IrModule {
        let unit = analyze(src, 0).unwrap();
        let reg = build_statement_registry(&unit);
        let mut m = lower(&unit, &reg, LowerOptions::default()).unwrap();
        let ctx = PassCtx {
            spans: &reg.spans,
            mapping: true,
            unroll_max_trips: 8,
            inline_max_instrs: 40,
        };
        zk_instrument(&mut m, &ctx);
        check_module(&m).unwrap();
        m
    }

    #[test]
    fn require_marker_is_mapped() {
        let src = "contract V { uint c; function f(uint p) external { require(p != 0, \"Invalid proof\"); c = p; } }";
        let m = instrumented(src);
        let z = m
            .instrs()
            .find(|i| matches!(i.op, Op::ZkConstraint { .. }))
            .unwrap();
        assert_eq!(z.op, Op::ZkConstraint { index: 1 });
        assert_eq!(z.prov.confidence, Confidence::Exact);
        assert_eq!(z.prov.zk_constraint, Some(1));
        assert!(z
            .prov
            .primary_span
            .unwrap()
            .snippet(src)
            .starts_with("require"));
    }

    #[test]
    fn bitwise_marker_is_synthetic() {
        let src = "contract B { function checkBit(uint input) external returns (bool) { return (input & 1) == 1; } }";
        let m = instrumented(src);
        let z = m
            .instrs()
            .find(|i| matches!(i.op, Op::ZkConstraint { .. }))
            .unwrap();
        assert_eq!(z.prov.confidence, Confidence::Synthetic);
        assert!(z.prov.primary_span.is_none());
    }

    #[test]
    fn no_op_without_requires_or_bitwise() {
        let src = "contract N { uint c; function f(uint p) external { c = p + 1; } }";
        let unit = analyze(src, 0).unwrap();
        let reg = build_statement_registry(&unit);
        let before = lower(&unit, &reg, LowerOptions::default()).unwrap();
        assert_eq!(instrumented(src), before);
    }
}
