use std::collections::BTreeMap;

use super::PassCtx;
use crate::ir::{Block, Instr, IrModule, Op, ValueId};

fn movable(op: &Op) -> bool {
    matches!(
        op,
        Op::Const(_) | Op::Copy(_) | Op::Binary(..) | Op::Cmp(..) | Op::Not(_) | Op::Caller
    )
}

/// Sinks pure instructions to just before their first use inside the block.
/// Provenance is left alone; only positions change. Returns how many instructions moved.
pub fn reorder(m: &mut IrModule, _ctx: &PassCtx) -> usize {
    let mut moved = 0;
    for f in &mut m.functions {
        for b in &mut f.blocks {
            moved += reorder_block(b);
        }
    }
    moved
}

struct Scheduler {
    pending: BTreeMap<ValueId, Instr>,
    out: Vec<Instr>,
}

impl Scheduler {
    fn emit_operands(&mut self, op: &Op) {
        let mut uses: Vec<ValueId> = op
            .uses()
            .into_iter()
            .filter(|u| self.pending.contains_key(u))
            .collect();
        uses.sort_unstable();
        uses.dedup();
        for u in uses {
            if let Some(i) = self.pending.remove(&u) {
                self.emit_operands(&i.op);
                self.out.push(i);
            }
        }
    }

    /// Emits everything still pending in id order, operands first.
    fn flush(&mut self) {
        while let Some((_, i)) = self.pending.pop_first() {
            self.emit_operands(&i.op);
            self.out.push(i);
        }
    }
}

fn reorder_block(b: &mut Block) -> usize {
    let original: Vec<ValueId> = b.instrs.iter().map(|i| i.id).collect();
    let mut s = Scheduler {
        pending: BTreeMap::new(),
        out: Vec::with_capacity(b.instrs.len()),
    };
    for i in std::mem::take(&mut b.instrs) {
        if i.op.is_terminator() {
            // Terminator operands and live-out values share the last use position: ir_id order.
            s.flush();
            s.out.push(i);
        } else if movable(&i.op) {
            s.pending.insert(i.id, i);
        } else {
            if !matches!(i.op, Op::Phi(_)) {
                s.emit_operands(&i.op);
            }
            s.out.push(i);
        }
    }
    // A block without terminator only exists mid-construction; keep leftovers anyway.
    s.flush();
    b.instrs = s.out;

    b.instrs
        .iter()
        .zip(&original)
        .filter(|(i, id)| i.id != **id)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{JumpType, Provenance};

    fn instr(id: u32, op: Op) -> Instr {
        Instr {
            id,
            op,
            prov: Provenance::synthetic(),
            jump: JumpType::Regular,
            modifier_depth: 0,
        }
    }

    #[test]
    fn constant_sinks_past_load() {
        let mut b = Block {
            id: 0,
            instrs: vec![
                instr(1, Op::Const(5)),
                instr(2, Op::LoadState { slot: 0 }),
                instr(3, Op::Binary(crate::ir::BinOp::Add, 2, 1)),
                instr(4, Op::StoreState { slot: 0, value: 3 }),
                instr(5, Op::Return(None)),
            ],
        };
        let moved = reorder_block(&mut b);
        let ids: Vec<u32> = b.instrs.iter().map(|i| i.id).collect();
        assert_eq!(ids, vec![2, 1, 3, 4, 5]);
        assert!(moved > 0);
    }

    #[test]
    fn effects_keep_their_order() {
        let mut b = Block {
            id: 0,
            instrs: vec![
                instr(1, Op::Const(7)),
                instr(2, Op::StoreState { slot: 0, value: 1 }),
                instr(3, Op::LoadState { slot: 0 }),
                instr(4, Op::StoreState { slot: 1, value: 3 }),
                instr(5, Op::Return(None)),
            ],
        };
        assert_eq!(reorder_block(&mut b), 0);
        let ids: Vec<u32> = b.instrs.iter().map(|i| i.id).collect();
        assert_eq!(ids, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn unused_values_flush_in_dependency_order() {
        let mut b = Block {
            id: 0,
            instrs: vec![
                instr(9, Op::Const(1)),
                instr(3, Op::Not(9)),
                instr(5, Op::Return(None)),
            ],
        };
        reorder_block(&mut b);
        let ids: Vec<u32> = b.instrs.iter().map(|i| i.id).collect();
        assert_eq!(ids, vec![9, 3, 5]);
    }

    #[test]
    fn terminator_ties_follow_ir_id() {
        let mut b = Block {
            id: 0,
            instrs: vec![
                instr(1, Op::Param(0)),
                instr(7, Op::Cmp(crate::ir::CmpOp::Gt, 1, 1)),
                instr(4, Op::Binary(crate::ir::BinOp::Mul, 1, 1)),
                instr(
                    8,
                    Op::Branch {
                        cond: 7,
                        then_to: 1,
                        else_to: 2,
                        origin: crate::ir::BranchOrigin::Plain,
                    },
                ),
            ],
        };
        reorder_block(&mut b);
        let ids: Vec<u32> = b.instrs.iter().map(|i| i.id).collect();
        assert_eq!(ids, vec![1, 4, 7, 8]);
    }
}
