//! AST to SSA lowering with on-the-fly phi construction over sealed blocks.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::frontend::ast::*;
use crate::frontend::{ResolvedUnit, StatementRegistry, Symbol};
use crate::ir::{
    BinOp, BlockId, BranchOrigin, CmpOp, EventSig, Instr, IrFunction, IrModule, Op, StateSlot,
    ValueId,
};
use crate::model::{Confidence, JumpType, Provenance, SourceSpan, StatementId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LowerOptions {
    /// Attach provenance to instructions. Off only when measuring mapping overhead.
    pub provenance: bool,
}

impl Default for LowerOptions {
    fn default() -> Self {
        LowerOptions { provenance: true }
    }
}

pub const DIV_ZERO_MESSAGE: &str = "division by zero";

pub fn lower_unit(unit: &ResolvedUnit, reg: &StatementRegistry, opts: LowerOptions) -> IrModule {
    let mut m = IrModule {
        contracts: unit
            .ast
            .contracts
            .iter()
            .map(|c| c.name.name.clone())
            .collect(),
        ..Default::default()
    };
    for (i, v) in unit.symbols.state_vars.iter().enumerate() {
        m.state.push(StateSlot {
            name: v.name.clone(),
            mapping: matches!(v.ty, TypeName::Mapping(..)),
        });
        let init = unit.state_var(i).init.as_ref().map_or(0, |e| match e.kind {
            ExprKind::Number(n) => n,
            ExprKind::Bool(b) => b as u64,
            _ => 0,
        });
        if init != 0 {
            m.initial_storage.push((v.slot, init));
        }
    }
    for e in &unit.symbols.events {
        m.events.push(EventSig {
            name: e.name.clone(),
            arity: e.params.len() as u8,
        });
    }
    for fi in 0..unit.symbols.functions.len() {
        let f = FnBuilder::new(unit, reg, &mut m, fi, opts).build();
        m.functions.push(f);
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Var {
    /// A local in a given expansion level (0 = function body, i + 1 = modifier i).
    Local(usize, NodeId),
    Ret,
}

struct FnBuilder<'a> {
    unit: &'a ResolvedUnit,
    reg: &'a StatementRegistry,
    m: &'a mut IrModule,
    f: IrFunction,
    fi: usize,
    prov_on: bool,
    cur: BlockId,
    sealed: BTreeSet<BlockId>,
    preds: BTreeMap<BlockId, Vec<BlockId>>,
    defs: HashMap<(Var, BlockId), ValueId>,
    incomplete: BTreeMap<BlockId, Vec<(Var, ValueId)>>,
    phi_ctl: BTreeMap<BlockId, Provenance>,
    structural: BTreeSet<u32>,
    stmt: StatementId,
    depth: u32,
    inst: usize,
    ret_target: BlockId,
}

impl<'a> FnBuilder<'a> {
    fn new(
        unit: &'a ResolvedUnit,
        reg: &'a StatementRegistry,
        m: &'a mut IrModule,
        fi: usize,
        opts: LowerOptions,
    ) -> Self {
        let info = &unit.symbols.functions[fi];
        let f = IrFunction {
            name: info.name.clone(),
            contract: info.contract,
            arity: info.arity as u32,
            visibility: info.visibility,
            returns_value: info.returns.is_some(),
            blocks: Vec::new(),
            next_block: 0,
        };
        FnBuilder {
            unit,
            reg,
            m,
            f,
            fi,
            prov_on: opts.provenance,
            cur: 0,
            sealed: BTreeSet::new(),
            preds: BTreeMap::new(),
            defs: HashMap::new(),
            incomplete: BTreeMap::new(),
            phi_ctl: BTreeMap::new(),
            structural: BTreeSet::new(),
            stmt: 0,
            depth: 0,
            inst: 0,
            ret_target: 0,
        }
    }

    fn build(mut self) -> IrFunction {
        let func = self.unit.function(self.fi);
        let entry = self.new_block();
        self.seal(entry);
        self.cur = entry;
        self.stmt = self
            .reg
            .entries
            .get(self.fi)
            .copied()
            .unwrap_or(func.exit.id);
        for (k, p) in func.params.iter().enumerate() {
            let v = self.emit(Op::Param(k as u32), p.span);
            self.write(Var::Local(0, p.id), entry, v);
        }
        let exit = self.new_block();
        self.phi_ctl.insert(
            exit,
            self.prov(func.exit.span, func.exit.id, Confidence::Approximate),
        );
        self.expand(0);
        if self.is_open() {
            self.jump_structural(exit);
        }
        self.seal(exit);
        self.cur = exit;
        self.stmt = func.exit.id;
        self.depth = 0;
        let ret = if self.f.returns_value {
            Some(self.read(Var::Ret, exit))
        } else {
            None
        };
        let jump = match self.f.visibility {
            Visibility::Internal => JumpType::OutOf,
            Visibility::External => JumpType::Regular,
        };
        self.emit_with(Op::Return(ret), func.exit.span, jump);

        // Keep the exit block last for readable listings.
        let pos = self.f.blocks.iter().position(|b| b.id == exit).unwrap();
        let b = self.f.blocks.remove(pos);
        self.f.blocks.push(b);

        if self.prov_on {
            self.attribute_structural_jumps();
        }
        remove_trivial_phis(&mut self.f);
        self.f
    }

    fn prov(&self, span: SourceSpan, stmt: StatementId, conf: Confidence) -> Provenance {
        if self.prov_on {
            Provenance::exact(span, stmt).with_confidence(conf)
        } else {
            Provenance::default()
        }
    }

    fn new_block(&mut self) -> BlockId {
        let id = self.f.new_block();
        self.preds.insert(id, Vec::new());
        id
    }

    fn is_open(&self) -> bool {
        self.f.block(self.cur).terminator().is_none()
    }

    fn emit(&mut self, op: Op, span: SourceSpan) -> ValueId {
        self.emit_with(op, span, JumpType::Regular)
    }

    fn emit_with(&mut self, op: Op, span: SourceSpan, jump: JumpType) -> ValueId {
        let id = self.m.fresh_id();
        let prov = self.prov(span, self.stmt, Confidence::Exact);
        for s in op.successors() {
            let p = self.preds.get_mut(&s).expect("target block exists");
            if !p.contains(&self.cur) {
                p.push(self.cur);
            }
        }
        let depth = self.depth;
        self.f.block_mut(self.cur).instrs.push(Instr {
            id,
            op,
            prov,
            jump,
            modifier_depth: depth,
        });
        id
    }

    /// Fallthrough edge; its provenance is taken from the target once lowering is done.
    fn jump_structural(&mut self, target: BlockId) {
        let span = self.reg.span(self.stmt).unwrap_or_default();
        let id = self.emit(Op::Jump(target), span);
        self.structural.insert(id);
    }

    fn branch(
        &mut self,
        cond: ValueId,
        then_to: BlockId,
        else_to: BlockId,
        origin: BranchOrigin,
        span: SourceSpan,
    ) {
        self.emit(
            Op::Branch {
                cond,
                then_to,
                else_to,
                origin,
            },
            span,
        );
    }

    fn write(&mut self, v: Var, b: BlockId, val: ValueId) {
        self.defs.insert((v, b), val);
    }

    fn read(&mut self, v: Var, b: BlockId) -> ValueId {
        if let Some(&x) = self.defs.get(&(v, b)) {
            return x;
        }
        let val = if !self.sealed.contains(&b) {
            let phi = self.new_phi(b);
            self.incomplete.entry(b).or_default().push((v, phi));
            phi
        } else {
            let preds = self.preds[&b].clone();
            match preds.as_slice() {
                [] => self.undef(b),
                [p] => self.read(v, *p),
                _ => {
                    let phi = self.new_phi(b);
                    self.write(v, b, phi);
                    self.add_phi_operands(v, phi, b);
                    phi
                }
            }
        };
        self.write(v, b, val);
        val
    }

    fn new_phi(&mut self, b: BlockId) -> ValueId {
        let id = self.m.fresh_id();
        let prov = match self.phi_ctl.get(&b) {
            Some(p) => p.clone(),
            None => {
                let span = self.reg.span(self.stmt).unwrap_or_default();
                self.prov(span, self.stmt, Confidence::Approximate)
            }
        };
        let depth = self.depth;
        let block = self.f.block_mut(b);
        let at = block.phi_count();
        block.instrs.insert(
            at,
            Instr {
                id,
                op: Op::Phi(Vec::new()),
                prov,
                jump: JumpType::Regular,
                modifier_depth: depth,
            },
        );
        id
    }

    /// Reads of variables with no reaching definition evaluate to zero.
    fn undef(&mut self, b: BlockId) -> ValueId {
        let id = self.m.fresh_id();
        let span = self.reg.span(self.stmt).unwrap_or_default();
        let prov = self.prov(span, self.stmt, Confidence::Exact);
        let depth = self.depth;
        let block = self.f.block_mut(b);
        let at = if block.terminator().is_some() {
            block.instrs.len() - 1
        } else {
            block.instrs.len()
        };
        block.instrs.insert(
            at,
            Instr {
                id,
                op: Op::Const(0),
                prov,
                jump: JumpType::Regular,
                modifier_depth: depth,
            },
        );
        id
    }

    fn add_phi_operands(&mut self, v: Var, phi: ValueId, b: BlockId) {
        let preds = self.preds[&b].clone();
        let mut incoming = Vec::with_capacity(preds.len());
        for p in preds {
            incoming.push((p, self.read(v, p)));
        }
        let instr = self
            .f
            .block_mut(b)
            .instrs
            .iter_mut()
            .find(|i| i.id == phi)
            .expect("phi present");
        instr.op = Op::Phi(incoming);
    }

    fn seal(&mut self, b: BlockId) {
        if let Some(pending) = self.incomplete.remove(&b) {
            for (v, phi) in pending {
                self.add_phi_operands(v, phi, b);
            }
        }
        self.sealed.insert(b);
    }

    fn expand(&mut self, level: usize) {
        let func = self.unit.function(self.fi);
        let n = func.modifiers.len();
        if level == n {
            let saved = (self.ret_target, self.inst, self.depth);
            let after = self.new_block();
            self.phi_ctl.insert(
                after,
                self.prov(func.exit.span, func.exit.id, Confidence::Approximate),
            );
            self.ret_target = after;
            self.inst = 0;
            self.depth = 0;
            for s in &func.body.stmts {
                self.stmt(s, level);
            }
            if self.is_open() {
                self.jump_structural(after);
            }
            self.seal(after);
            self.cur = after;
            (self.ret_target, self.inst, self.depth) = saved;
            return;
        }
        let inv = &func.modifiers[level];
        let Some(Symbol::Modifier(mi)) = self.unit.binding(inv.id) else {
            return self.expand(level + 1);
        };
        let md = self.unit.modifier(mi);
        self.depth = (n - level) as u32;
        if !inv.args.is_empty() {
            self.stmt = inv.id;
            self.inst = 0;
            let mut vals = Vec::new();
            for a in &inv.args {
                vals.push(self.expr(a));
            }
            for (p, v) in md.params.iter().zip(vals) {
                let copy = self.emit(Op::Copy(v), inv.span);
                self.write(Var::Local(level + 1, p.id), self.cur, copy);
            }
        }
        self.inst = level + 1;
        for s in &md.body.stmts {
            self.stmt(s, level);
        }
    }

    fn assign_local(&mut self, node: NodeId, val: ValueId, span: SourceSpan) {
        let copy = self.emit(Op::Copy(val), span);
        self.write(Var::Local(self.inst, node), self.cur, copy);
    }

    fn stmt(&mut self, s: &Stmt, level: usize) {
        match &s.kind {
            StmtKind::Block(b) => {
                for st in &b.stmts {
                    self.stmt(st, level);
                }
                return;
            }
            StmtKind::Placeholder => {
                let saved = (self.inst, self.depth);
                self.expand(level + 1);
                (self.inst, self.depth) = saved;
                return;
            }
            _ => {}
        }
        self.stmt = s.id;
        match &s.kind {
            StmtKind::VarDecl { init, .. } => {
                let v = match init {
                    Some(e) => self.expr(e),
                    None => self.emit(Op::Const(0), s.span),
                };
                self.assign_local(s.id, v, s.span);
            }
            StmtKind::Assign { target, value } => match &target.kind {
                ExprKind::Index { base, index } => {
                    let key = self.expr(index);
                    let val = self.expr(value);
                    let slot = self.slot_of(base);
                    self.emit(
                        Op::StoreKey {
                            slot,
                            key,
                            value: val,
                        },
                        s.span,
                    );
                }
                _ => {
                    let val = self.expr(value);
                    match self.unit.binding(target.id) {
                        Some(Symbol::StateVar(i)) => {
                            let slot = self.unit.symbols.state_vars[i].slot;
                            self.emit(Op::StoreState { slot, value: val }, s.span);
                        }
                        Some(Symbol::Local(node)) => self.assign_local(node, val, s.span),
                        _ => unreachable!("assignment target checked by the type checker"),
                    }
                }
            },
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let c = self.expr(cond);
                let then_b = self.new_block();
                let join = self.new_block();
                let else_b = if else_branch.is_some() {
                    self.new_block()
                } else {
                    join
                };
                self.stmt = s.id;
                self.branch(c, then_b, else_b, BranchOrigin::Plain, cond.span);
                self.phi_ctl
                    .insert(join, self.prov(s.span, s.id, Confidence::Approximate));
                self.seal(then_b);
                self.cur = then_b;
                self.stmt(then_branch, level);
                if self.is_open() {
                    self.jump_structural(join);
                }
                if let Some(e) = else_branch {
                    self.seal(else_b);
                    self.cur = else_b;
                    self.stmt(e, level);
                    if self.is_open() {
                        self.jump_structural(join);
                    }
                }
                self.seal(join);
                self.cur = join;
            }
            StmtKind::While { cond, body } => {
                let header = self.new_block();
                self.jump_structural(header);
                self.phi_ctl
                    .insert(header, self.prov(s.span, s.id, Confidence::Approximate));
                self.cur = header;
                self.stmt = s.id;
                let c = self.expr(cond);
                let body_b = self.new_block();
                let exit = self.new_block();
                self.branch(c, body_b, exit, BranchOrigin::Plain, cond.span);
                self.seal(body_b);
                self.cur = body_b;
                self.stmt(body, level);
                if self.is_open() {
                    self.jump_structural(header);
                }
                self.seal(header);
                self.seal(exit);
                self.cur = exit;
            }
            StmtKind::For {
                init,
                cond,
                step,
                body,
            } => {
                if let Some(i) = init {
                    self.stmt(i, level);
                }
                self.stmt = s.id;
                let header = self.new_block();
                self.jump_structural(header);
                self.phi_ctl
                    .insert(header, self.prov(s.span, s.id, Confidence::Approximate));
                self.cur = header;
                let c = self.expr(cond);
                let body_b = self.new_block();
                let latch = self.new_block();
                let exit = self.new_block();
                self.branch(c, body_b, exit, BranchOrigin::ForLoop, cond.span);
                self.seal(body_b);
                self.cur = body_b;
                self.stmt(body, level);
                if self.is_open() {
                    self.jump_structural(latch);
                }
                self.seal(latch);
                self.cur = latch;
                if let Some(st) = step {
                    self.stmt(st, level);
                }
                self.stmt = s.id;
                self.jump_structural(header);
                self.seal(header);
                self.seal(exit);
                self.cur = exit;
            }
            StmtKind::Require { cond, message } => {
                let c = self.expr(cond);
                self.stmt = s.id;
                let cont = self.new_block();
                let fail = self.new_block();
                self.branch(c, cont, fail, BranchOrigin::Require(0), s.span);
                self.seal(cont);
                self.seal(fail);
                self.cur = fail;
                let msg = self.m.intern_string(message.as_deref().unwrap_or(""));
                self.emit(Op::Revert { message: msg }, s.span);
                self.cur = cont;
            }
            StmtKind::Emit { args, .. } => {
                let vals: Vec<ValueId> = args.iter().map(|a| self.expr(a)).collect();
                let Some(Symbol::Event(ei)) = self.unit.binding(s.id) else {
                    unreachable!("emit resolved")
                };
                self.emit(
                    Op::EmitEvent {
                        event: ei as u16,
                        args: vals,
                    },
                    s.span,
                );
            }
            StmtKind::Return(e) => {
                if let Some(e) = e {
                    let v = self.expr(e);
                    self.write(Var::Ret, self.cur, v);
                }
                self.stmt = s.id;
                let target = self.ret_target;
                self.emit(Op::Jump(target), s.span);
                let dead = self.new_block();
                self.seal(dead);
                self.cur = dead;
            }
            StmtKind::Expr(e) => {
                self.expr(e);
            }
            StmtKind::Block(_) | StmtKind::Placeholder => unreachable!(),
        }
    }

    fn slot_of(&self, base: &Expr) -> u16 {
        match self.unit.binding(base.id) {
            Some(Symbol::StateVar(i)) => self.unit.symbols.state_vars[i].slot,
            _ => unreachable!("indexed base is a mapping state variable"),
        }
    }

    fn expr(&mut self, e: &Expr) -> ValueId {
        match &e.kind {
            ExprKind::Number(n) => self.emit(Op::Const(*n), e.span),
            ExprKind::Bool(b) => self.emit(Op::Const(*b as u64), e.span),
            ExprKind::MsgSender => self.emit(Op::Caller, e.span),
            ExprKind::Ident(_) => match self.unit.binding(e.id) {
                Some(Symbol::Local(node)) => self.read(Var::Local(self.inst, node), self.cur),
                Some(Symbol::StateVar(i)) => {
                    let slot = self.unit.symbols.state_vars[i].slot;
                    self.emit(Op::LoadState { slot }, e.span)
                }
                _ => unreachable!("identifier resolved to a value"),
            },
            ExprKind::Unary(UnaryOp::Not, x) => {
                let v = self.expr(x);
                self.emit(Op::Not(v), e.span)
            }
            ExprKind::Unary(UnaryOp::Neg, x) => {
                let v = self.expr(x);
                let zero = self.emit(Op::Const(0), e.span);
                self.emit(Op::Binary(BinOp::Sub, zero, v), e.span)
            }
            ExprKind::Binary(op @ (BinaryOp::And | BinaryOp::Or), l, r) => {
                let lv = self.expr(l);
                let lend = self.cur;
                let rhs = self.new_block();
                let join = self.new_block();
                if *op == BinaryOp::And {
                    self.branch(lv, rhs, join, BranchOrigin::Plain, e.span);
                } else {
                    self.branch(lv, join, rhs, BranchOrigin::Plain, e.span);
                }
                self.seal(rhs);
                self.cur = rhs;
                let rv = self.expr(r);
                let rend = self.cur;
                self.emit(Op::Jump(join), e.span);
                self.phi_ctl
                    .insert(join, self.prov(e.span, self.stmt, Confidence::Approximate));
                self.seal(join);
                self.cur = join;
                let phi = self.new_phi(join);
                let instr = self
                    .f
                    .block_mut(join)
                    .instrs
                    .iter_mut()
                    .find(|i| i.id == phi)
                    .unwrap();
                instr.op = Op::Phi(vec![(lend, lv), (rend, rv)]);
                phi
            }
            ExprKind::Binary(op, l, r) => {
                let lv = self.expr(l);
                let rv = self.expr(r);
                let op = match op {
                    BinaryOp::Eq => return self.emit(Op::Cmp(CmpOp::Eq, lv, rv), e.span),
                    BinaryOp::Ne => return self.emit(Op::Cmp(CmpOp::Ne, lv, rv), e.span),
                    BinaryOp::Lt => return self.emit(Op::Cmp(CmpOp::Lt, lv, rv), e.span),
                    BinaryOp::Gt => return self.emit(Op::Cmp(CmpOp::Gt, lv, rv), e.span),
                    BinaryOp::Le => return self.emit(Op::Cmp(CmpOp::Le, lv, rv), e.span),
                    BinaryOp::Ge => return self.emit(Op::Cmp(CmpOp::Ge, lv, rv), e.span),
                    BinaryOp::BitOr => BinOp::Or,
                    BinaryOp::BitXor => BinOp::Xor,
                    BinaryOp::BitAnd => BinOp::And,
                    BinaryOp::Shl => BinOp::Shl,
                    BinaryOp::Shr => BinOp::Shr,
                    BinaryOp::Add => BinOp::Add,
                    BinaryOp::Sub => BinOp::Sub,
                    BinaryOp::Mul => BinOp::Mul,
                    BinaryOp::Div => BinOp::Div,
                    BinaryOp::Mod => BinOp::Mod,
                    BinaryOp::And | BinaryOp::Or => unreachable!(),
                };
                if matches!(op, BinOp::Div | BinOp::Mod) {
                    self.div_guard(rv, e.span);
                }
                self.emit(Op::Binary(op, lv, rv), e.span)
            }
            ExprKind::Call { args, .. } => {
                let vals: Vec<ValueId> = args.iter().map(|a| self.expr(a)).collect();
                let Some(Symbol::Function(func)) = self.unit.binding(e.id) else {
                    unreachable!("call resolved")
                };
                self.emit_with(Op::Call { func, args: vals }, e.span, JumpType::Into)
            }
            ExprKind::Index { base, index } => {
                let key = self.expr(index);
                let slot = self.slot_of(base);
                self.emit(Op::LoadKey { slot, key }, e.span)
            }
        }
    }

    fn div_guard(&mut self, divisor: ValueId, span: SourceSpan) {
        let zero = self.emit(Op::Const(0), span);
        let is_zero = self.emit(Op::Cmp(CmpOp::Eq, divisor, zero), span);
        let ok = self.new_block();
        let fail = self.new_block();
        self.branch(is_zero, fail, ok, BranchOrigin::DivGuard, span);
        self.seal(ok);
        self.seal(fail);
        self.cur = fail;
        let msg = self.m.intern_string(DIV_ZERO_MESSAGE);
        self.emit(Op::Revert { message: msg }, span);
        self.cur = ok;
    }

    fn attribute_structural_jumps(&mut self) {
        let firsts: BTreeMap<BlockId, (u32, Provenance, u32)> = self
            .f
            .blocks
            .iter()
            .filter_map(|b| {
                b.first_non_phi()
                    .map(|i| (b.id, (i.id, i.prov.clone(), i.modifier_depth)))
            })
            .collect();
        let targets: BTreeMap<u32, BlockId> = self
            .f
            .instrs()
            .filter_map(|i| match i.op {
                Op::Jump(t) if self.structural.contains(&i.id) => Some((i.id, t)),
                _ => None,
            })
            .collect();
        let mut resolved: BTreeMap<u32, (Provenance, u32)> = BTreeMap::new();
        for (&jid, &target) in &targets {
            let mut t = target;
            let mut hops = 0;
            let found = loop {
                let Some((first, prov, depth)) = firsts.get(&t) else {
                    break None;
                };
                match targets.get(first) {
                    Some(&next) if hops < targets.len() => {
                        t = next;
                        hops += 1;
                    }
                    Some(_) => break None,
                    None => break Some((prov.clone(), *depth)),
                }
            };
            if let Some(r) = found {
                resolved.insert(jid, r);
            }
        }
        for i in self.f.instrs_mut() {
            if let Some((prov, depth)) = resolved.remove(&i.id) {
                i.prov = prov;
                i.modifier_depth = depth;
            }
        }
    }
}

/// Removes phis whose operands are all the same value (or the phi itself).
pub fn remove_trivial_phis(f: &mut IrFunction) -> usize {
    let mut removed = 0;
    loop {
        let mut map: BTreeMap<ValueId, ValueId> = BTreeMap::new();
        for i in f.instrs() {
            if let Op::Phi(inc) = &i.op {
                let others: BTreeSet<ValueId> =
                    inc.iter().map(|(_, v)| *v).filter(|v| *v != i.id).collect();
                if others.len() == 1 {
                    map.insert(i.id, *others.iter().next().unwrap());
                }
            }
        }
        if map.is_empty() {
            return removed;
        }
        // Only one phi per round when phis reference each other, to avoid cycles in the map.
        let map: BTreeMap<ValueId, ValueId> = {
            let mut acyclic = BTreeMap::new();
            for (k, v) in map {
                if !acyclic.contains_key(&v) {
                    acyclic.insert(k, v);
                }
            }
            acyclic
        };
        removed += map.len();
        for b in &mut f.blocks {
            b.instrs.retain(|i| !map.contains_key(&i.id));
        }
        f.replace_uses(&map);
    }
}
