use std::collections::BTreeMap;

use super::dce::remove_unreachable_blocks;
use super::PassCtx;
use crate::ir::{BlockId, IrFunction, IrModule, Op};

/// Threads jump-only blocks, merges straight-line chains, then lays blocks out in reverse post-order.
pub fn cfg_restructure(m: &mut IrModule, _ctx: &PassCtx) -> usize {
    for f in &mut m.functions {
        remove_unreachable_blocks(f);
        while thread_one(f) || merge_one(f) {
            remove_unreachable_blocks(f);
        }
        let pos: BTreeMap<BlockId, usize> = f
            .reverse_postorder()
            .into_iter()
            .enumerate()
            .map(|(k, b)| (b, k))
            .collect();
        f.blocks.sort_by_key(|b| pos[&b.id]);
    }
    0
}

fn has_phis(f: &IrFunction, b: BlockId) -> bool {
    f.block(b).phi_count() > 0
}

fn retarget_phis(f: &mut IrFunction, succs: &[BlockId], from: BlockId, to: BlockId) {
    for s in succs {
        for i in f.block_mut(*s).instrs.iter_mut() {
            if let Op::Phi(inc) = &mut i.op {
                for (p, _) in inc.iter_mut() {
                    if *p == from {
                        *p = to;
                    }
                }
            }
        }
    }
}

/// Redirects predecessors of a block holding nothing but a jump straight to its target.
fn thread_one(f: &mut IrFunction) -> bool {
    let entry = f.entry();
    let found = f.blocks.iter().find_map(|b| match b.instrs.as_slice() {
        [only] => match only.op {
            Op::Jump(target) if b.id != entry && target != b.id && !has_phis(f, target) => {
                Some((b.id, target))
            }
            _ => None,
        },
        _ => None,
    });
    let Some((t, target)) = found else {
        return false;
    };
    for b in &mut f.blocks {
        if b.id == t {
            continue;
        }
        if let Some(term) = b.terminator_mut() {
            term.op.map_targets(|x| if x == t { target } else { x });
        }
    }
    true
}

/// Folds a block into its unique predecessor when that predecessor jumps to it unconditionally.
fn merge_one(f: &mut IrFunction) -> bool {
    let entry = f.entry();
    let preds = f.predecessors();
    let found = f
        .blocks
        .iter()
        .find_map(|a| match a.terminator().map(|t| &t.op) {
            Some(Op::Jump(b))
                if *b != a.id
                    && *b != entry
                    && !has_phis(f, *b)
                    && preds.get(b).is_some_and(|p| p.len() == 1) =>
            {
                Some((a.id, *b))
            }
            _ => None,
        });
    let Some((a, b)) = found else {
        return false;
    };
    let pos = f.blocks.iter().position(|x| x.id == b).unwrap();
    let tail = f.blocks.remove(pos).instrs;
    let succs: Vec<BlockId> = tail.last().map(|t| t.op.successors()).unwrap_or_default();
    let block = f.block_mut(a);
    block.instrs.pop();
    block.instrs.extend(tail);
    retarget_phis(f, &succs, b, a);
    true
}
