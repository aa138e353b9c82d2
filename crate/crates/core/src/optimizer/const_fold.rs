use std::collections::BTreeMap;

use super::PassCtx;
use crate::ir::{BinOp, Instr, IrFunction, IrModule, Op, ValueId};
use crate::model::{merge_provenance, Confidence, Provenance};

enum Rewrite {
    /// Uses of the instruction are redirected to an existing value; the instruction goes away.
    Forward(ValueId),
    /// The instruction becomes a fresh constant.
    Fold(u64, Provenance),
}

pub fn const_fold(m: &mut IrModule, ctx: &PassCtx) -> usize {
    for fi in 0..m.functions.len() {
        loop {
            let changed = fold_round(m, fi, ctx);
            if !changed {
                break;
            }
        }
    }
    0
}

fn fold_round(m: &mut IrModule, fi: usize, ctx: &PassCtx) -> bool {
    let f = &m.functions[fi];
    let consts: BTreeMap<ValueId, u64> = f
        .instrs()
        .filter_map(|i| match i.op {
            Op::Const(c) => Some((i.id, c)),
            _ => None,
        })
        .collect();
    let provs: BTreeMap<ValueId, &Provenance> = f.instrs().map(|i| (i.id, &i.prov)).collect();

    let mut rewrites: BTreeMap<u32, Rewrite> = BTreeMap::new();
    for i in f.instrs() {
        if let Some(r) = rewrite(i, &consts, &provs, ctx) {
            rewrites.insert(i.id, r);
            // One rewrite per round keeps operand lookups consistent.
            break;
        }
    }
    if rewrites.is_empty() {
        return false;
    }
    apply(m, fi, rewrites);
    true
}

fn apply(m: &mut IrModule, fi: usize, rewrites: BTreeMap<u32, Rewrite>) {
    let mut forward: BTreeMap<ValueId, ValueId> = BTreeMap::new();
    let mut fresh: Vec<(u32, u64, Provenance)> = Vec::new();
    for (id, r) in rewrites {
        match r {
            Rewrite::Forward(v) => {
                forward.insert(id, v);
            }
            Rewrite::Fold(c, p) => fresh.push((id, c, p)),
        }
    }
    for (old, c, prov) in fresh {
        let new_id = m.fresh_id();
        let f = &mut m.functions[fi];
        if let Some(i) = f.instrs_mut().find(|i| i.id == old) {
            i.id = new_id;
            i.op = Op::Const(c);
            i.prov = prov;
        }
        forward.insert(old, new_id);
    }
    let f: &mut IrFunction = &mut m.functions[fi];
    for b in &mut f.blocks {
        b.instrs.retain(|i| !forward.contains_key(&i.id));
    }
    f.replace_uses(&forward);
}

fn rewrite(
    i: &Instr,
    consts: &BTreeMap<ValueId, u64>,
    provs: &BTreeMap<ValueId, &Provenance>,
    ctx: &PassCtx,
) -> Option<Rewrite> {
    let folded = |value: u64, operands: &[ValueId]| -> Rewrite {
        if !ctx.mapping {
            return Rewrite::Fold(value, Provenance::default());
        }
        let same_origin = operands.iter().all(|o| {
            provs.get(o).is_some_and(|p| {
                p.statement_id == i.prov.statement_id && p.inline_chain == i.prov.inline_chain
            })
        });
        let prov = if same_origin {
            let mut acc = provs[&operands[0]].clone();
            for o in &operands[1..] {
                acc = merge_provenance(&acc, provs[o], ctx.spans);
            }
            merge_provenance(&i.prov, &acc, ctx.spans)
        } else {
            let mut p = i.prov.clone();
            p.downgrade_to(Confidence::Approximate);
            p
        };
        Rewrite::Fold(value, prov)
    };
    let c = |v: &ValueId| consts.get(v).copied();
    match &i.op {
        Op::Copy(v) => Some(Rewrite::Forward(*v)),
        Op::Not(a) => c(a).map(|x| folded((x == 0) as u64, &[*a])),
        Op::Cmp(op, a, b) => match (c(a), c(b)) {
            (Some(x), Some(y)) => Some(folded(op.eval(x, y), &[*a, *b])),
            _ => None,
        },
        Op::Binary(op, a, b) => {
            let (ca, cb) = (c(a), c(b));
            if let (Some(x), Some(y)) = (ca, cb) {
                return Some(folded(op.eval(x, y), &[*a, *b]));
            }
            identity(*op, *a, *b, ca, cb).map(|r| match r {
                Identity::Value(v) => Rewrite::Forward(v),
                Identity::Zero => {
                    let mut p = i.prov.clone();
                    if !ctx.mapping {
                        p = Provenance::default();
                    }
                    Rewrite::Fold(0, p)
                }
            })
        }
        Op::Phi(inc) => {
            let first = inc.iter().map(|(_, v)| *v).find(|v| *v != i.id)?;
            inc.iter()
                .all(|(_, v)| *v == first || *v == i.id)
                .then_some(Rewrite::Forward(first))
        }
        _ => None,
    }
}

enum Identity {
    Value(ValueId),
    Zero,
}

fn identity(
    op: BinOp,
    a: ValueId,
    b: ValueId,
    ca: Option<u64>,
    cb: Option<u64>,
) -> Option<Identity> {
    use Identity::*;
    match op {
        BinOp::Add | BinOp::Or | BinOp::Xor => match (ca, cb) {
            (_, Some(0)) => Some(Value(a)),
            (Some(0), _) => Some(Value(b)),
            _ if op == BinOp::Or && a == b => Some(Value(a)),
            _ => None,
        },
        BinOp::Sub | BinOp::Shl | BinOp::Shr => (cb == Some(0)).then_some(Value(a)),
        BinOp::Mul => match (ca, cb) {
            (_, Some(1)) => Some(Value(a)),
            (Some(1), _) => Some(Value(b)),
            (_, Some(0)) | (Some(0), _) => Some(Zero),
            _ => None,
        },
        BinOp::Div => (cb == Some(1)).then_some(Value(a)),
        BinOp::And => (a == b).then_some(Value(a)),
        BinOp::Mod => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{analyze, build_statement_registry};
    use crate::ir::check_module;
    use crate::lowering::{lower, LowerOptions};

    fn folded(src: &str) -> (IrModule, crate::frontend::StatementRegistry) {
        let unit = analyze(src, 0).unwrap();
        let reg = build_statement_registry(&unit);
        let mut m = lower(&unit, &reg, LowerOptions::default()).unwrap();
        let ctx = PassCtx {
            spans: &reg.spans,
            mapping: true,
            unroll_max_trips: 8,
            inline_max_instrs: 40,
        };
        const_fold(&mut m, &ctx);
        check_module(&m).unwrap();
        (m, reg)
    }

    #[test]
    fn folds_with_containing_span() {
        let src = "contract C { uint x; function f() external { x = 2 + 3; } }";
        let (m, _) = folded(src);
        let five = m.instrs().find(|i| i.op == Op::Const(5)).unwrap();
        assert_eq!(five.prov.primary_span.unwrap().snippet(src), "2 + 3");
        assert_eq!(five.prov.confidence, Confidence::Exact);
        assert!(!m.instrs().any(|i| matches!(i.op, Op::Binary(..))));
    }

    #[test]
    fn identity_leaves_operand_untouched() {
        let src = "contract C { uint x; function f(uint a) external { x = a * 1; } }";
        let (m, _) = folded(src);
        assert!(!m.instrs().any(|i| matches!(i.op, Op::Binary(..))));
        let store = m
            .instrs()
            .find(|i| matches!(i.op, Op::StoreState { .. }))
            .unwrap();
        let Op::StoreState { value, .. } = store.op else {
            unreachable!()
        };
        let param = m.instrs().find(|i| i.id == value).unwrap();
        assert_eq!(param.op, Op::Param(0));
        assert_eq!(param.prov.confidence, Confidence::Exact);
    }

    #[test]
    fn cross_statement_fold_is_approximate() {
        let src = "contract C { uint x; function f() external { uint a = 2; x = a + 3; } }";
        let (m, _) = folded(src);
        let five = m.instrs().find(|i| i.op == Op::Const(5)).unwrap();
        assert_eq!(five.prov.confidence, Confidence::Approximate);
        assert_eq!(five.prov.primary_span.unwrap().snippet(src), "a + 3");
    }

    #[test]
    fn copies_disappear_and_zero_product() {
        let src = "contract C { uint x; function f(uint a) external { uint b = a; x = b * 0; } }";
        let (m, _) = folded(src);
        assert!(!m.instrs().any(|i| matches!(i.op, Op::Copy(_))));
        let store = m
            .instrs()
            .find(|i| matches!(i.op, Op::StoreState { .. }))
            .unwrap();
        let Op::StoreState { value, .. } = store.op else {
            unreachable!()
        };
        assert_eq!(m.instrs().find(|i| i.id == value).unwrap().op, Op::Const(0));
    }
}
