use std::collections::BTreeMap;

use crate::ir::{BranchOrigin, IrModule, Op};

/// Numbers require-derived branches 1..n per contract in lowering order.
/// Already numbered branches keep their index, so running twice changes nothing.
pub fn assign_constraint_indices(m: &mut IrModule) {
    let mut next: BTreeMap<usize, u32> = BTreeMap::new();
    let mut pending: Vec<(u32, usize, usize, usize)> = Vec::new();
    for (fi, f) in m.functions.iter().enumerate() {
        for (bi, b) in f.blocks.iter().enumerate() {
            for (ii, i) in b.instrs.iter().enumerate() {
                if let Op::Branch {
                    origin: BranchOrigin::Require(k),
                    ..
                } = i.op
                {
                    let n = next.entry(f.contract).or_insert(0);
                    *n = (*n).max(k);
                    if k == 0 {
                        pending.push((i.id, fi, bi, ii));
                    }
                }
            }
        }
    }
    pending.sort();
    for (_, fi, bi, ii) in pending {
        let contract = m.functions[fi].contract;
        let n = next.entry(contract).or_insert(0);
        *n += 1;
        let index = *n;
        let f = &mut m.functions[fi];
        let instr = &mut f.blocks[bi].instrs[ii];
        let Op::Branch {
            origin, else_to, ..
        } = &mut instr.op
        else {
            unreachable!()
        };
        *origin = BranchOrigin::Require(index);
        let fail = *else_to;
        if instr.prov.primary_span.is_some() {
            instr.prov.zk_constraint = Some(index);
        }
        if let Some(t) = f
            .blocks
            .iter_mut()
            .find(|b| b.id == fail)
            .and_then(|b| b.terminator_mut())
        {
            if matches!(t.op, Op::Revert { .. }) && t.prov.primary_span.is_some() {
                t.prov.zk_constraint = Some(index);
            }
        }
    }
}
