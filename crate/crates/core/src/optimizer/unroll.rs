use std::collections::{BTreeMap, BTreeSet};

use super::PassCtx;
use crate::ir::{
    BinOp, BlockId, BranchOrigin, CmpOp, DomTree, Instr, IrFunction, IrModule, Op, ValueId,
};
use crate::model::JumpType;

/// Fully unrolls counted loops `for (i = c0; i < c1; i = i + c2)` whose trip count fits the limit.
pub fn unroll(m: &mut IrModule, ctx: &PassCtx) -> usize {
    for fi in 0..m.functions.len() {
        // Each unrolling removes one loop, so the number of rounds is bounded by the loop count.
        while let Some(plan) = find_loop(&m.functions[fi], ctx.unroll_max_trips) {
            apply(m, fi, plan);
        }
    }
    0
}

struct Plan {
    header: BlockId,
    preheader: BlockId,
    latch: BlockId,
    exit: BlockId,
    body: BTreeSet<BlockId>,
    trips: u64,
}

fn defs(f: &IrFunction) -> BTreeMap<ValueId, &Op> {
    f.instrs().map(|i| (i.id, &i.op)).collect()
}

fn through_copies(defs: &BTreeMap<ValueId, &Op>, mut v: ValueId) -> ValueId {
    while let Some(Op::Copy(x)) = defs.get(&v) {
        v = *x;
    }
    v
}

fn constant(defs: &BTreeMap<ValueId, &Op>, v: ValueId) -> Option<u64> {
    match defs.get(&through_copies(defs, v)) {
        Some(Op::Const(c)) => Some(*c),
        _ => None,
    }
}

fn revert_only(f: &IrFunction, b: BlockId) -> bool {
    matches!(f.block(b).instrs.as_slice(), [i] if matches!(i.op, Op::Revert { .. }))
}

fn find_loop(f: &IrFunction, max_trips: u32) -> Option<Plan> {
    let dom = DomTree::compute(f);
    let preds = f.predecessors();
    let defs = defs(f);
    f.reverse_postorder().into_iter().find_map(|h| {
        let ps = preds.get(&h)?;
        let [a, b] = ps.as_slice() else {
            return None;
        };
        let (latch, preheader) = if dom.dominates(h, *a) {
            (*a, *b)
        } else {
            (*b, *a)
        };
        if !dom.dominates(h, latch) || dom.dominates(h, preheader) {
            return None;
        }
        let body = natural_loop(&preds, h, latch);
        let Op::Branch {
            cond,
            then_to,
            else_to,
            origin: BranchOrigin::ForLoop,
        } = &f.block(h).terminator()?.op
        else {
            return None;
        };
        let exit = *else_to;
        if !body.contains(then_to) || body.contains(&exit) || f.block(exit).phi_count() > 0 {
            return None;
        }
        if preds.get(&exit).map(Vec::as_slice) != Some(&[h][..]) {
            return None;
        }
        for bid in &body {
            let term = f.block(*bid).terminator()?;
            if matches!(term.op, Op::Return(_) | Op::Revert { .. }) {
                return None;
            }
            for s in term.op.successors() {
                let ok = body.contains(&s) || (*bid == h && s == exit) || revert_only(f, s);
                if !ok {
                    return None;
                }
            }
        }
        // Condition: i < c1, with i a header phi.
        let Some(Op::Cmp(CmpOp::Lt, iv, bound)) = defs.get(&through_copies(&defs, *cond)) else {
            return None;
        };
        let iv = through_copies(&defs, *iv);
        let c1 = constant(&defs, *bound)?;
        let phi = f.block(h).instrs.iter().find(|i| i.id == iv)?;
        let Op::Phi(inc) = &phi.op else {
            return None;
        };
        let init = inc.iter().find(|(p, _)| *p == preheader)?.1;
        let next = inc.iter().find(|(p, _)| *p == latch)?.1;
        let c0 = constant(&defs, init)?;
        let Some(Op::Binary(BinOp::Add, x, y)) = defs.get(&through_copies(&defs, next)) else {
            return None;
        };
        let c2 = if through_copies(&defs, *x) == iv {
            constant(&defs, *y)?
        } else if through_copies(&defs, *y) == iv {
            constant(&defs, *x)?
        } else {
            return None;
        };
        if c2 == 0 {
            return None;
        }
        let mut trips = 0u64;
        let mut i = c0;
        while i < c1 {
            trips += 1;
            if trips > max_trips as u64 {
                return None;
            }
            i = i.checked_add(c2)?;
        }
        // Non-phi header values must stay inside the loop.
        let header_vals: BTreeSet<ValueId> = f
            .block(h)
            .instrs
            .iter()
            .filter(|i| !matches!(i.op, Op::Phi(_)))
            .map(|i| i.id)
            .collect();
        let escapes = f
            .blocks
            .iter()
            .filter(|b| !body.contains(&b.id))
            .flat_map(|b| b.instrs.iter())
            .any(|i| i.op.uses().iter().any(|u| header_vals.contains(u)));
        if escapes {
            return None;
        }
        Some(Plan {
            header: h,
            preheader,
            latch,
            exit,
            body,
            trips,
        })
    })
}

fn natural_loop(
    preds: &BTreeMap<BlockId, Vec<BlockId>>,
    h: BlockId,
    latch: BlockId,
) -> BTreeSet<BlockId> {
    let mut body = BTreeSet::from([h, latch]);
    let mut work = vec![latch];
    while let Some(b) = work.pop() {
        if b == h {
            continue;
        }
        for p in preds.get(&b).into_iter().flatten() {
            if body.insert(*p) {
                work.push(*p);
            }
        }
    }
    body
}

fn apply(m: &mut IrModule, fi: usize, plan: Plan) {
    let f = m.functions[fi].clone();
    let h = plan.header;
    let order: Vec<BlockId> = f
        .blocks
        .iter()
        .map(|b| b.id)
        .filter(|b| plan.body.contains(b))
        .collect();
    let header_phis: Vec<(ValueId, Vec<(BlockId, ValueId)>)> = f
        .block(h)
        .instrs
        .iter()
        .filter_map(|i| match &i.op {
            Op::Phi(inc) => Some((i.id, inc.clone())),
            _ => None,
        })
        .collect();

    // Value of each header phi on entry to iteration t.
    let mut phi_vals: BTreeMap<ValueId, ValueId> = header_phis
        .iter()
        .map(|(id, inc)| {
            (
                *id,
                inc.iter().find(|(p, _)| *p == plan.preheader).unwrap().1,
            )
        })
        .collect();

    let mut new_blocks: Vec<(BlockId, Vec<Instr>)> = Vec::new();
    let mut headers: Vec<BlockId> = Vec::new();
    for _ in 0..plan.trips {
        let mut bmap: BTreeMap<BlockId, BlockId> = BTreeMap::new();
        for b in &order {
            bmap.insert(*b, m.functions[fi].new_block());
        }
        headers.push(bmap[&h]);
        let mut vmap: BTreeMap<ValueId, ValueId> = phi_vals.clone();
        for b in &order {
            for i in &f.block(*b).instrs {
                if !(*b == h && matches!(i.op, Op::Phi(_))) {
                    vmap.insert(i.id, m.fresh_id());
                }
            }
        }
        for b in &order {
            let mut instrs = Vec::new();
            for i in &f.block(*b).instrs {
                if *b == h && matches!(i.op, Op::Phi(_)) {
                    continue;
                }
                let mut ni = i.clone();
                ni.id = vmap[&i.id];
                ni.op.map_uses(|v| vmap.get(&v).copied().unwrap_or(v));
                if let Op::Phi(inc) = &mut ni.op {
                    for (p, _) in inc.iter_mut() {
                        *p = bmap[p];
                    }
                }
                if *b == h && ni.op.is_terminator() {
                    let Op::Branch { then_to, .. } = ni.op else {
                        unreachable!()
                    };
                    ni.op = Op::Jump(bmap[&then_to]);
                    ni.jump = JumpType::Regular;
                } else {
                    // Back edges are patched once the next header exists.
                    ni.op.map_targets(|t| {
                        if t == h {
                            h
                        } else {
                            bmap.get(&t).copied().unwrap_or(t)
                        }
                    });
                }
                instrs.push(ni);
            }
            new_blocks.push((bmap[b], instrs));
        }
        for (id, inc) in &header_phis {
            let from_latch = inc.iter().find(|(p, _)| *p == plan.latch).unwrap().1;
            phi_vals.insert(*id, vmap.get(&from_latch).copied().unwrap_or(from_latch));
        }
    }
    headers.push(plan.exit);

    let fm = &mut m.functions[fi];
    let mut k = 0;
    for (bid, mut instrs) in new_blocks {
        if let Some(t) = instrs.last_mut() {
            if t.op.successors().contains(&h) {
                k += 1;
                let next = headers[k];
                t.op.map_targets(|x| if x == h { next } else { x });
            }
        }
        fm.block_mut(bid).instrs = instrs;
    }
    let first = headers[0];
    if let Some(t) = fm.block_mut(plan.preheader).terminator_mut() {
        t.op.map_targets(|x| if x == h { first } else { x });
    }
    let at = fm.blocks.iter().position(|b| b.id == h).unwrap();
    let clones: Vec<_> = {
        let fresh: BTreeSet<BlockId> = fm
            .blocks
            .iter()
            .map(|b| b.id)
            .filter(|b| !f.has_block(*b))
            .collect();
        let mut v = Vec::new();
        fm.blocks.retain(|b| {
            if fresh.contains(&b.id) {
                v.push(b.clone());
                false
            } else {
                true
            }
        });
        v
    };
    fm.blocks.retain(|b| !plan.body.contains(&b.id));
    for (j, b) in clones.into_iter().enumerate() {
        fm.blocks.insert(at + j, b);
    }
    fm.replace_uses(&phi_vals);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{analyze, build_statement_registry};
    use crate::ir::check_module;
    use crate::lowering::{lower, LowerOptions};
    use crate::model::Confidence;

    fn unrolled(src: &str, max: u32) -> (IrModule, IrModule) {
        let unit = analyze(src, 0).unwrap();
        let reg = build_statement_registry(&unit);
        let before = lower(&unit, &reg, LowerOptions::default()).unwrap();
        let mut m = before.clone();
        let ctx = PassCtx {
            spans: &reg.spans,
            mapping: true,
            unroll_max_trips: max,
            inline_max_instrs: 40,
        };
        unroll(&mut m, &ctx);
        check_module(&m).unwrap();
        (before, m)
    }

    fn stores(m: &IrModule) -> Vec<&Instr> {
        m.instrs()
            .filter(|i| matches!(i.op, Op::StoreState { .. }))
            .collect()
    }

    #[test]
    fn three_copies_share_span() {
        let src = "contract L { uint s; function f() external { for (uint i = 0; i < 3; i = i + 1) { s = s + i; } } }";
        let (_, m) = unrolled(src, 8);
        let st = stores(&m);
        assert_eq!(st.len(), 3);
        for s in &st {
            assert_eq!(s.prov.primary_span.unwrap().snippet(src), "s = s + i;");
            assert_eq!(s.prov.confidence, Confidence::Exact);
        }
        assert!(!m.instrs().any(|i| matches!(i.op, Op::Phi(_))));
    }

    #[test]
    fn limits_and_shapes() {
        let src = "contract L { uint s; function f() external { for (uint i = 0; i < 9; i = i + 1) { s = s + i; } } }";
        let (before, after) = unrolled(src, 8);
        assert_eq!(before, after);
        let src = "contract L { uint s; function f(uint n) external { uint i = 0; while (i < 3) { s = s + n; i = i + 1; } } }";
        let (before, after) = unrolled(src, 8);
        assert_eq!(before, after);
        let src = "contract L { uint s; function f() external { for (uint i = 5; i < 3; i = i + 1) { s = 1; } s = 2; } }";
        let (_, after) = unrolled(src, 8);
        assert_eq!(stores(&after).len(), 1);
    }

    #[test]
    fn loop_value_used_after_exit() {
        let src = "contract L { uint s; function f() external { uint t = 0; for (uint i = 0; i < 4; i = i + 2) { t = t + i; } s = t; } }";
        let (_, m) = unrolled(src, 8);
        assert!(!m.instrs().any(|i| matches!(i.op, Op::Phi(_))));
        assert_eq!(stores(&m).len(), 1);
    }
}
