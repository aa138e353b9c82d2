//! Well-formedness checker for the SSA IR, independent of the builder.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::dom::DomTree;
use super::types::{BlockId, IrFunction, IrModule, Op, ValueId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("SSA violation in `{function}`: {message}")]
pub struct SsaError {
    pub function: String,
    pub message: String,
}

pub fn check_module(m: &IrModule) -> Result<(), SsaError> {
    let mut ids = BTreeSet::new();
    for f in &m.functions {
        for i in f.instrs() {
            if !ids.insert(i.id) {
                return Err(err(f, format!("ir_id %{} defined twice", i.id)));
            }
            if i.id >= m.next_id {
                return Err(err(f, format!("ir_id %{} beyond allocator", i.id)));
            }
            if let Op::Call { func, args } = &i.op {
                let Some(callee) = m.functions.get(*func) else {
                    return Err(err(f, format!("%{} calls unknown function", i.id)));
                };
                if callee.arity as usize != args.len() {
                    return Err(err(f, format!("%{} passes wrong argument count", i.id)));
                }
            }
        }
        check_function(f)?;
    }
    Ok(())
}

fn err(f: &IrFunction, message: String) -> SsaError {
    SsaError {
        function: f.name.clone(),
        message,
    }
}

pub fn check_function(f: &IrFunction) -> Result<(), SsaError> {
    if f.blocks.is_empty() {
        return Err(err(f, "no blocks".into()));
    }
    let mut block_ids = BTreeSet::new();
    for b in &f.blocks {
        if !block_ids.insert(b.id) {
            return Err(err(f, format!("block bb{} defined twice", b.id)));
        }
    }
    // Where each value is defined: (block, position).
    let mut def: BTreeMap<ValueId, (BlockId, usize)> = BTreeMap::new();
    for b in &f.blocks {
        let Some(last) = b.instrs.last() else {
            return Err(err(f, format!("bb{} is empty", b.id)));
        };
        if !last.op.is_terminator() {
            return Err(err(f, format!("bb{} does not end in a terminator", b.id)));
        }
        let mut seen_non_phi = false;
        for (pos, i) in b.instrs.iter().enumerate() {
            if i.op.is_terminator() && pos + 1 != b.instrs.len() {
                return Err(err(
                    f,
                    format!("terminator %{} in the middle of bb{}", i.id, b.id),
                ));
            }
            match i.op {
                Op::Phi(_) if seen_non_phi => {
                    return Err(err(f, format!("phi %{} after non-phi in bb{}", i.id, b.id)));
                }
                Op::Phi(_) => {}
                _ => seen_non_phi = true,
            }
            if matches!(i.op, Op::Param(_)) && b.id != f.entry() {
                return Err(err(f, format!("param %{} outside the entry block", i.id)));
            }
            for t in i.op.successors() {
                if !block_ids.contains(&t) {
                    return Err(err(f, format!("%{} targets missing bb{t}", i.id)));
                }
            }
            if i.op.defines_value() {
                def.insert(i.id, (b.id, pos));
            }
        }
    }
    let preds = f.predecessors();
    if !preds[&f.entry()].is_empty() {
        return Err(err(f, "entry block has predecessors".into()));
    }
    let dom = DomTree::compute(f);
    for b in &f.blocks {
        if !dom.is_reachable(b.id) {
            continue;
        }
        for (pos, i) in b.instrs.iter().enumerate() {
            if let Op::Phi(incoming) = &i.op {
                let from: BTreeSet<BlockId> = incoming.iter().map(|(p, _)| *p).collect();
                let expected: BTreeSet<BlockId> = preds[&b.id].iter().copied().collect();
                if from != expected || from.len() != incoming.len() {
                    return Err(err(
                        f,
                        format!(
                            "phi %{} incoming blocks do not match predecessors of bb{}",
                            i.id, b.id
                        ),
                    ));
                }
                for (p, v) in incoming {
                    let Some(&(db, _)) = def.get(v) else {
                        return Err(err(f, format!("phi %{} uses undefined %{v}", i.id)));
                    };
                    if dom.is_reachable(*p) && !dom.dominates(db, *p) {
                        return Err(err(
                            f,
                            format!("phi %{} operand %{v} does not dominate bb{p}", i.id),
                        ));
                    }
                }
                continue;
            }
            for v in i.op.uses() {
                let Some(&(db, dpos)) = def.get(&v) else {
                    return Err(err(f, format!("%{} uses undefined %{v}", i.id)));
                };
                let ok = if db == b.id {
                    dpos < pos
                } else {
                    dom.dominates(db, b.id)
                };
                if !ok {
                    return Err(err(
                        f,
                        format!("%{} uses %{v} which does not dominate it", i.id),
                    ));
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::ast::Visibility;
    use crate::ir::types::{BinOp, Block, Instr};
    use crate::model::{JumpType, Provenance};

    fn ins(id: u32, op: Op) -> Instr {
        Instr {
            id,
            op,
            prov: Provenance::synthetic(),
            jump: JumpType::Regular,
            modifier_depth: 0,
        }
    }

    fn module(blocks: Vec<Block>) -> IrModule {
        IrModule {
            functions: vec![IrFunction {
                name: "f".into(),
                contract: 0,
                arity: 0,
                visibility: Visibility::External,
                returns_value: true,
                blocks,
                next_block: 9,
            }],
            next_id: 100,
            ..Default::default()
        }
    }

    #[test]
    fn accepts_straight_line() {
        let m = module(vec![Block {
            id: 0,
            instrs: vec![
                ins(1, Op::Const(2)),
                ins(2, Op::Binary(BinOp::Add, 1, 1)),
                ins(3, Op::Return(Some(2))),
            ],
        }]);
        assert_eq!(check_module(&m), Ok(()));
    }

    #[test]
    fn rejects_use_before_def() {
        let m = module(vec![Block {
            id: 0,
            instrs: vec![
                ins(2, Op::Binary(BinOp::Add, 1, 1)),
                ins(1, Op::Const(2)),
                ins(3, Op::Return(None)),
            ],
        }]);
        assert!(check_module(&m).is_err());
    }

    #[test]
    fn rejects_duplicate_ids_and_missing_terminator() {
        let m = module(vec![Block {
            id: 0,
            instrs: vec![
                ins(1, Op::Const(2)),
                ins(1, Op::Const(3)),
                ins(3, Op::Return(None)),
            ],
        }]);
        assert!(check_module(&m).is_err());
        let m = module(vec![Block {
            id: 0,
            instrs: vec![ins(1, Op::Const(2))],
        }]);
        assert!(check_module(&m).is_err());
    }

    #[test]
    fn phi_must_match_predecessors() {
        let diamond = |phi: Op| {
            module(vec![
                Block {
                    id: 0,
                    instrs: vec![
                        ins(1, Op::Const(1)),
                        ins(
                            2,
                            Op::Branch {
                                cond: 1,
                                then_to: 1,
                                else_to: 2,
                                origin: crate::ir::types::BranchOrigin::Plain,
                            },
                        ),
                    ],
                },
                Block {
                    id: 1,
                    instrs: vec![ins(3, Op::Const(5)), ins(4, Op::Jump(3))],
                },
                Block {
                    id: 2,
                    instrs: vec![ins(5, Op::Const(6)), ins(6, Op::Jump(3))],
                },
                Block {
                    id: 3,
                    instrs: vec![ins(7, phi), ins(8, Op::Return(Some(7)))],
                },
            ])
        };
        assert_eq!(
            check_module(&diamond(Op::Phi(vec![(1, 3), (2, 5)]))),
            Ok(())
        );
        assert!(check_module(&diamond(Op::Phi(vec![(1, 3)]))).is_err());
        assert!(check_module(&diamond(Op::Phi(vec![(1, 5), (2, 3)]))).is_err());
    }
}
