use std::collections::{BTreeMap, BTreeSet};

use super::PassCtx;
use crate::ir::{Block, BlockId, FuncId, Instr, IrFunction, IrModule, Op, ValueId};
use crate::model::{JumpType, SourceSpan};

/// Functions that sit on a call-graph cycle (including self-recursion).
fn recursive_functions(m: &IrModule) -> BTreeSet<FuncId> {
    let n = m.functions.len();
    let callees: Vec<BTreeSet<FuncId>> = m
        .functions
        .iter()
        .map(|f| {
            f.instrs()
                .filter_map(|i| match i.op {
                    Op::Call { func, .. } => Some(func),
                    _ => None,
                })
                .collect()
        })
        .collect();
    let mut out = BTreeSet::new();
    for start in 0..n {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<FuncId> = callees[start].iter().copied().collect();
        while let Some(g) = stack.pop() {
            if g == start {
                out.insert(start);
                break;
            }
            if seen.insert(g) {
                stack.extend(callees[g].iter().copied());
            }
        }
    }
    out
}

pub fn inline(m: &mut IrModule, ctx: &PassCtx) -> usize {
    let recursive = recursive_functions(m);
    for fi in 0..m.functions.len() {
        loop {
            let site = m.functions[fi].blocks.iter().find_map(|b| {
                b.instrs
                    .iter()
                    .enumerate()
                    .find_map(|(pos, i)| match &i.op {
                        Op::Call { func, .. }
                            if *func != fi
                                && !recursive.contains(func)
                                && m.functions[*func].instr_count() <= ctx.inline_max_instrs =>
                        {
                            Some((b.id, pos))
                        }
                        _ => None,
                    })
            });
            let Some((block, pos)) = site else {
                break;
            };
            inline_at(m, fi, block, pos, ctx.mapping);
        }
    }
    0
}

fn inline_at(m: &mut IrModule, fi: FuncId, block: BlockId, pos: usize, mapping: bool) {
    let call = m.functions[fi].block(block).instrs[pos].clone();
    let Op::Call {
        func: callee_id,
        args,
    } = &call.op
    else {
        unreachable!()
    };
    let callee: IrFunction = m.functions[*callee_id].clone();

    // Split the calling block: everything after the call moves to a continuation.
    let cont = m.functions[fi].new_block();
    {
        let f = &mut m.functions[fi];
        let b = f.block_mut(block);
        let tail: Vec<Instr> = b.instrs.split_off(pos + 1);
        b.instrs.pop();
        f.block_mut(cont).instrs = tail;
        for succ in f.block(cont).successors() {
            for i in f.block_mut(succ).instrs.iter_mut() {
                if let Op::Phi(inc) = &mut i.op {
                    for (p, _) in inc.iter_mut() {
                        if *p == block {
                            *p = cont;
                        }
                    }
                }
            }
        }
    }

    let mut bmap: BTreeMap<BlockId, BlockId> = BTreeMap::new();
    for b in &callee.blocks {
        bmap.insert(b.id, m.functions[fi].new_block());
    }
    let mut vmap: BTreeMap<ValueId, ValueId> = BTreeMap::new();
    for i in callee.instrs() {
        match i.op {
            Op::Param(k) => {
                vmap.insert(i.id, args[k as usize]);
            }
            _ => {
                vmap.insert(i.id, m.fresh_id());
            }
        }
    }
    let site: Option<SourceSpan> = call.prov.primary_span;
    let mut returns: Vec<(BlockId, Option<ValueId>)> = Vec::new();
    for b in &callee.blocks {
        let nb = bmap[&b.id];
        let mut instrs = Vec::with_capacity(b.instrs.len());
        for i in &b.instrs {
            if matches!(i.op, Op::Param(_)) {
                continue;
            }
            let mut ni = i.clone();
            ni.id = vmap[&i.id];
            ni.op.map_uses(|v| vmap.get(&v).copied().unwrap_or(v));
            ni.op.map_targets(|t| bmap[&t]);
            if let Op::Phi(inc) = &mut ni.op {
                for (p, _) in inc.iter_mut() {
                    *p = bmap[p];
                }
            }
            if let Op::Return(v) = ni.op {
                returns.push((nb, v));
                ni.op = Op::Jump(cont);
                ni.jump = JumpType::Regular;
            }
            if mapping {
                if let Some(s) = site {
                    let mut chain = call.prov.inline_chain.clone();
                    chain.push(s);
                    chain.extend(ni.prov.inline_chain.iter().copied());
                    ni.prov.inline_chain = chain;
                }
            }
            instrs.push(ni);
        }
        m.functions[fi].block_mut(nb).instrs = instrs;
    }

    let entry_clone = bmap[&callee.entry()];
    let jump_id = m.fresh_id();
    let f = &mut m.functions[fi];
    f.block_mut(block).instrs.push(Instr {
        id: jump_id,
        op: Op::Jump(entry_clone),
        prov: call.prov.clone(),
        jump: JumpType::Regular,
        modifier_depth: call.modifier_depth,
    });

    let result: Option<ValueId> = match returns.as_slice() {
        [] => None,
        [(_, v)] => *v,
        many => {
            let incoming: Vec<(BlockId, ValueId)> = many
                .iter()
                .filter_map(|(b, v)| v.map(|v| (*b, v)))
                .collect();
            if incoming.len() == many.len() {
                let id = m.fresh_id();
                let f = &mut m.functions[fi];
                let mut prov = call.prov.clone();
                prov.downgrade_to(crate::model::Confidence::Approximate);
                f.block_mut(cont).instrs.insert(
                    0,
                    Instr {
                        id,
                        op: Op::Phi(incoming),
                        prov,
                        jump: JumpType::Regular,
                        modifier_depth: call.modifier_depth,
                    },
                );
                Some(id)
            } else {
                None
            }
        }
    };
    let f = &mut m.functions[fi];
    if let Some(r) = result {
        let map = BTreeMap::from([(call.id, r)]);
        f.replace_uses(&map);
    }
    // Keep the clone blocks right after the calling block for readable layouts.
    let at = f.blocks.iter().position(|b| b.id == block).unwrap() + 1;
    let mut moved: Vec<Block> = Vec::new();
    let order: Vec<BlockId> = callee
        .blocks
        .iter()
        .map(|b| bmap[&b.id])
        .chain([cont])
        .collect();
    for id in &order {
        let p = f.blocks.iter().position(|b| b.id == *id).unwrap();
        moved.push(f.blocks.remove(p));
    }
    for (k, b) in moved.into_iter().enumerate() {
        f.blocks.insert(at + k, b);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{analyze, build_statement_registry};
    use crate::ir::check_module;
    use crate::lowering::{lower, LowerOptions};

    fn inlined(src: &str, max: usize) -> IrModule {
        let unit = analyze(src, 0).unwrap();
        let reg = build_statement_registry(&unit);
        let mut m = lower(&unit, &reg, LowerOptions::default()).unwrap();
        let ctx = PassCtx {
            spans: &reg.spans,
            mapping: true,
            unroll_max_trips: 8,
            inline_max_instrs: max,
        };
        inline(&mut m, &ctx);
        check_module(&m).unwrap();
        m
    }

    #[test]
    fn inlined_constant_carries_call_site() {
        let src = "contract Z { function submitVote(uint p) external { require(verifyZKProof(p), \"Invalid proof\"); } \
                   function verifyZKProof(uint p) internal returns (bool) { return true; } }";
        let m = inlined(src, 40);
        let f = &m.functions[0];
        assert!(!f.instrs().any(|i| matches!(i.op, Op::Call { .. })));
        let t = f.instrs().find(|i| i.op == Op::Const(1)).unwrap();
        assert_eq!(t.prov.primary_span.unwrap().snippet(src), "true");
        assert_eq!(t.prov.inline_chain.len(), 1);
        assert_eq!(t.prov.inline_chain[0].snippet(src), "verifyZKProof(p)");
    }

    #[test]
    fn recursion_and_threshold_keep_calls() {
        let src = "contract R { function f(uint n) internal returns (uint) { if (n == 0) { return 0; } return f(n - 1); } \
                   function g(uint n) external returns (uint) { return f(n); } }";
        let m = inlined(src, 1000);
        assert!(m.functions[1]
            .instrs()
            .any(|i| matches!(i.op, Op::Call { .. })));
        let src = "contract T { function h(uint a) internal returns (uint) { return a + 1; } \
                   function g(uint n) external returns (uint) { return h(n); } }";
        let size = {
            let unit = analyze(src, 0).unwrap();
            let reg = build_statement_registry(&unit);
            lower(&unit, &reg, LowerOptions::default())
                .unwrap()
                .functions[0]
                .instr_count()
        };
        let m = inlined(src, size - 1);
        assert!(m.functions[1]
            .instrs()
            .any(|i| matches!(i.op, Op::Call { .. })));
        let m = inlined(src, size);
        assert!(!m.functions[1]
            .instrs()
            .any(|i| matches!(i.op, Op::Call { .. })));
    }
}
