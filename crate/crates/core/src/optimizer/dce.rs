use std::collections::BTreeSet;

use super::PassCtx;
use crate::ir::{IrFunction, IrModule, Op};
use crate::lowering::remove_trivial_phis;

/// Drops blocks not reachable from the entry and prunes phi inputs coming from them.
pub fn remove_unreachable_blocks(f: &mut IrFunction) -> bool {
    let live: BTreeSet<u32> = f.reverse_postorder().into_iter().collect();
    if live.len() == f.blocks.len() {
        return false;
    }
    f.blocks.retain(|b| live.contains(&b.id));
    for i in f.instrs_mut() {
        if let Op::Phi(inc) = &mut i.op {
            inc.retain(|(p, _)| live.contains(p));
        }
    }
    remove_trivial_phis(f);
    true
}

/// Mark-and-sweep over pure instructions; effects and terminators are roots.
fn sweep_dead(f: &mut IrFunction) {
    let mut live: BTreeSet<u32> = BTreeSet::new();
    let mut work: Vec<u32> = Vec::new();
    for i in f.instrs() {
        if !i.op.is_pure() {
            live.insert(i.id);
            work.push(i.id);
        }
    }
    let defs: std::collections::BTreeMap<u32, Vec<u32>> =
        f.instrs().map(|i| (i.id, i.op.uses())).collect();
    while let Some(id) = work.pop() {
        for u in defs.get(&id).into_iter().flatten() {
            if live.insert(*u) {
                work.push(*u);
            }
        }
    }
    for b in &mut f.blocks {
        b.instrs.retain(|i| live.contains(&i.id));
    }
}

pub fn dce(m: &mut IrModule, _ctx: &PassCtx) -> usize {
    for f in &mut m.functions {
        remove_unreachable_blocks(f);
        sweep_dead(f);
    }
    0
}
