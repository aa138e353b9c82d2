use std::collections::BTreeMap;

use super::state::{EventRecord, ExecError, ExecResult, Status, Storage, StorageKey, TxInput};
use crate::frontend::ast::{
    BinaryOp, Expr, ExprKind, Function, Stmt, StmtKind, UnaryOp, Visibility,
};
use crate::frontend::{ResolvedUnit, Symbol};
use crate::ir::{BinOp, CmpOp};
use crate::lowering::DIV_ZERO_MESSAGE;
use crate::model::StatementId;

pub const INTERP_STEP_LIMIT: u64 = 1_000_000;

enum Flow {
    Normal,
    Return,
}

/// Failed `require` or division by zero: unwinds the whole transaction.
struct Revert(String);

enum Stop {
    Revert(Revert),
    Error(ExecError),
}

impl From<ExecError> for Stop {
    fn from(e: ExecError) -> Self {
        Stop::Error(e)
    }
}

type R<T> = Result<T, Stop>;

struct Frame {
    /// Locals per instance: 0 is the function body, `i + 1` the i-th modifier.
    locals: Vec<BTreeMap<u32, u64>>,
    inst: usize,
    ret: u64,
}

struct Machine<'a> {
    unit: &'a ResolvedUnit,
    storage: Storage,
    events: Vec<EventRecord>,
    sender: u64,
    steps: u64,
    limit: u64,
    trace: Vec<StatementId>,
    current: StatementId,
}

/// Picks the external function named by `spec` (`name`, `Contract.name`, optional `/arity`).
pub fn find_external(unit: &ResolvedUnit, spec: &str, argc: usize) -> Result<usize, ExecError> {
    let (path, arity) = match spec.rsplit_once('/') {
        Some((p, a)) => (p, a.parse::<usize>().ok()),
        None => (spec, None),
    };
    let (contract, name) = match path.split_once('.') {
        Some((c, n)) => (Some(c), n),
        None => (None, path),
    };
    let arity = arity.unwrap_or(argc);
    unit.symbols
        .functions
        .iter()
        .position(|f| {
            f.visibility == Visibility::External
                && f.name == name
                && f.arity == arity
                && contract.is_none_or(|c| unit.symbols.contracts[f.contract] == c)
        })
        .ok_or_else(|| ExecError::UnknownFunction(spec.to_string()))
}

/// Runs one transaction on the AST, returning the result and one event per statement entry.
pub fn interpret_source(
    unit: &ResolvedUnit,
    storage: &Storage,
    tx: &TxInput,
) -> Result<(ExecResult, Vec<StatementId>), ExecError> {
    interpret_with_limit(unit, storage, tx, INTERP_STEP_LIMIT)
}

pub fn interpret_with_limit(
    unit: &ResolvedUnit,
    storage: &Storage,
    tx: &TxInput,
    limit: u64,
) -> Result<(ExecResult, Vec<StatementId>), ExecError> {
    let fi = find_external(unit, &tx.function, tx.args.len())?;
    let mut m = Machine {
        unit,
        storage: storage.clone(),
        events: Vec::new(),
        sender: tx.sender,
        steps: 0,
        limit,
        trace: Vec::new(),
        current: 0,
    };
    let result = match m.call(fi, &tx.args) {
        Ok(v) => ExecResult {
            status: Status::Returned(unit.symbols.functions[fi].returns.as_ref().map(|_| v)),
            storage: m.storage,
            events: m.events,
        },
        Err(Stop::Revert(Revert(msg))) => ExecResult {
            status: Status::Reverted(msg),
            storage: storage.clone(),
            events: Vec::new(),
        },
        Err(Stop::Error(e)) => return Err(e),
    };
    Ok((result, m.trace))
}

impl Machine<'_> {
    fn tick(&mut self) -> R<()> {
        self.steps += 1;
        if self.steps > self.limit {
            return Err(ExecError::StepLimit(self.limit).into());
        }
        Ok(())
    }

    fn enter(&mut self, stmt: StatementId) {
        self.current = stmt;
        self.trace.push(stmt);
    }

    fn call(&mut self, fi: usize, args: &[u64]) -> R<u64> {
        let f: &Function = self.unit.function(fi);
        let mut frame = Frame {
            locals: vec![BTreeMap::new(); f.modifiers.len() + 1],
            inst: 0,
            ret: 0,
        };
        for (p, v) in f.params.iter().zip(args) {
            frame.locals[0].insert(p.id, *v);
        }
        let saved = self.current;
        self.expand(f, &mut frame, 0)?;
        self.enter(f.exit.id);
        self.current = saved;
        Ok(frame.ret)
    }

    fn expand(&mut self, f: &Function, frame: &mut Frame, level: usize) -> R<()> {
        if level == f.modifiers.len() {
            let saved = frame.inst;
            frame.inst = 0;
            for s in &f.body.stmts {
                if let Flow::Return = self.stmt(s, f, frame, level)? {
                    break;
                }
            }
            frame.inst = saved;
            return Ok(());
        }
        let inv = &f.modifiers[level];
        let Some(Symbol::Modifier(mi)) = self.unit.binding(inv.id) else {
            return self.expand(f, frame, level + 1);
        };
        let md = self.unit.modifier(mi);
        if !inv.args.is_empty() {
            self.enter(inv.id);
            let saved = frame.inst;
            frame.inst = 0;
            let mut vals = Vec::new();
            for a in &inv.args {
                vals.push(self.expr(a, frame)?);
            }
            frame.inst = saved;
            for (p, v) in md.params.iter().zip(vals) {
                frame.locals[level + 1].insert(p.id, v);
            }
        }
        let saved = frame.inst;
        frame.inst = level + 1;
        for s in &md.body.stmts {
            self.stmt(s, f, frame, level)?;
        }
        frame.inst = saved;
        Ok(())
    }

    fn stmts(&mut self, stmts: &[Stmt], f: &Function, frame: &mut Frame, level: usize) -> R<Flow> {
        for s in stmts {
            if let Flow::Return = self.stmt(s, f, frame, level)? {
                return Ok(Flow::Return);
            }
        }
        Ok(Flow::Normal)
    }

    fn set_local(&mut self, frame: &mut Frame, node: u32, v: u64) {
        frame.locals[frame.inst].insert(node, v);
    }

    fn stmt(&mut self, s: &Stmt, f: &Function, frame: &mut Frame, level: usize) -> R<Flow> {
        self.tick()?;
        match &s.kind {
            StmtKind::Block(b) => return self.stmts(&b.stmts, f, frame, level),
            StmtKind::Placeholder => {
                self.expand(f, frame, level + 1)?;
                return Ok(Flow::Normal);
            }
            StmtKind::For { .. } | StmtKind::While { .. } => {}
            _ => self.enter(s.id),
        }
        match &s.kind {
            StmtKind::VarDecl { init, .. } => {
                let v = match init {
                    Some(e) => self.expr(e, frame)?,
                    None => 0,
                };
                self.set_local(frame, s.id, v);
            }
            StmtKind::Assign { target, value } => match &target.kind {
                ExprKind::Index { base, index } => {
                    let key = self.expr(index, frame)?;
                    let val = self.expr(value, frame)?;
                    let slot = self.slot_of(base);
                    self.storage.set(
                        StorageKey {
                            slot,
                            key: Some(key),
                        },
                        val,
                    );
                }
                _ => {
                    let val = self.expr(value, frame)?;
                    match self.unit.binding(target.id) {
                        Some(Symbol::StateVar(i)) => {
                            let slot = self.unit.symbols.state_vars[i].slot;
                            self.storage.set(StorageKey { slot, key: None }, val);
                        }
                        Some(Symbol::Local(node)) => self.set_local(frame, node, val),
                        _ => unreachable!("assignment target checked by the type checker"),
                    }
                }
            },
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                if self.expr(cond, frame)? != 0 {
                    return self.stmt(then_branch, f, frame, level);
                } else if let Some(e) = else_branch {
                    return self.stmt(e, f, frame, level);
                }
            }
            StmtKind::While { cond, body } => loop {
                self.tick()?;
                self.enter(s.id);
                if self.expr(cond, frame)? == 0 {
                    break;
                }
                if let Flow::Return = self.stmt(body, f, frame, level)? {
                    return Ok(Flow::Return);
                }
            },
            StmtKind::For {
                init,
                cond,
                step,
                body,
            } => {
                if let Some(i) = init {
                    self.stmt(i, f, frame, level)?;
                }
                loop {
                    self.tick()?;
                    self.enter(s.id);
                    if self.expr(cond, frame)? == 0 {
                        break;
                    }
                    if let Flow::Return = self.stmt(body, f, frame, level)? {
                        return Ok(Flow::Return);
                    }
                    if let Some(st) = step {
                        self.stmt(st, f, frame, level)?;
                    }
                }
            }
            StmtKind::Require { cond, message } => {
                if self.expr(cond, frame)? == 0 {
                    return Err(Stop::Revert(Revert(message.clone().unwrap_or_default())));
                }
            }
            StmtKind::Emit { args, .. } => {
                let mut vals = Vec::new();
                for a in args {
                    vals.push(self.expr(a, frame)?);
                }
                let Some(Symbol::Event(ei)) = self.unit.binding(s.id) else {
                    unreachable!("emit resolved")
                };
                self.events.push(EventRecord {
                    event: ei as u16,
                    name: self.unit.symbols.events[ei].name.clone(),
                    args: vals,
                });
            }
            StmtKind::Return(e) => {
                if let Some(e) = e {
                    frame.ret = self.expr(e, frame)?;
                }
                return Ok(Flow::Return);
            }
            StmtKind::Expr(e) => {
                self.expr(e, frame)?;
            }
            StmtKind::Block(_) | StmtKind::Placeholder => unreachable!(),
        }
        Ok(Flow::Normal)
    }

    fn slot_of(&self, base: &Expr) -> u16 {
        match self.unit.binding(base.id) {
            Some(Symbol::StateVar(i)) => self.unit.symbols.state_vars[i].slot,
            _ => unreachable!("indexed base is a mapping state variable"),
        }
    }

    fn expr(&mut self, e: &Expr, frame: &mut Frame) -> R<u64> {
        self.tick()?;
        Ok(match &e.kind {
            ExprKind::Number(n) => *n,
            ExprKind::Bool(b) => *b as u64,
            ExprKind::MsgSender => self.sender,
            ExprKind::Ident(_) => match self.unit.binding(e.id) {
                Some(Symbol::Local(node)) => {
                    frame.locals[frame.inst].get(&node).copied().unwrap_or(0)
                }
                Some(Symbol::StateVar(i)) => {
                    let slot = self.unit.symbols.state_vars[i].slot;
                    self.storage.get(StorageKey { slot, key: None })
                }
                _ => unreachable!("identifier resolved to a value"),
            },
            ExprKind::Unary(UnaryOp::Not, x) => (self.expr(x, frame)? == 0) as u64,
            ExprKind::Unary(UnaryOp::Neg, x) => 0u64.wrapping_sub(self.expr(x, frame)?),
            ExprKind::Binary(BinaryOp::And, l, r) => {
                let lv = self.expr(l, frame)?;
                if lv == 0 {
                    lv
                } else {
                    self.expr(r, frame)?
                }
            }
            ExprKind::Binary(BinaryOp::Or, l, r) => {
                let lv = self.expr(l, frame)?;
                if lv != 0 {
                    lv
                } else {
                    self.expr(r, frame)?
                }
            }
            ExprKind::Binary(op, l, r) => {
                let a = self.expr(l, frame)?;
                let b = self.expr(r, frame)?;
                binary(*op, a, b)?
            }
            ExprKind::Call { args, .. } => {
                let mut vals = Vec::new();
                for a in args {
                    vals.push(self.expr(a, frame)?);
                }
                let Some(Symbol::Function(fi)) = self.unit.binding(e.id) else {
                    unreachable!("call resolved")
                };
                let v = self.call(fi, &vals)?;
                // Control comes back to the statement that made the call.
                let resume = self.current;
                self.trace.push(resume);
                v
            }
            ExprKind::Index { base, index } => {
                let key = self.expr(index, frame)?;
                let slot = self.slot_of(base);
                self.storage.get(StorageKey {
                    slot,
                    key: Some(key),
                })
            }
        })
    }
}

fn binary(op: BinaryOp, a: u64, b: u64) -> R<u64> {
    let cmp = |c: CmpOp| Ok(c.eval(a, b));
    let bin = |o: BinOp| Ok(o.eval(a, b));
    match op {
        BinaryOp::Eq => cmp(CmpOp::Eq),
        BinaryOp::Ne => cmp(CmpOp::Ne),
        BinaryOp::Lt => cmp(CmpOp::Lt),
        BinaryOp::Gt => cmp(CmpOp::Gt),
        BinaryOp::Le => cmp(CmpOp::Le),
        BinaryOp::Ge => cmp(CmpOp::Ge),
        BinaryOp::BitOr => bin(BinOp::Or),
        BinaryOp::BitXor => bin(BinOp::Xor),
        BinaryOp::BitAnd => bin(BinOp::And),
        BinaryOp::Shl => bin(BinOp::Shl),
        BinaryOp::Shr => bin(BinOp::Shr),
        BinaryOp::Add => bin(BinOp::Add),
        BinaryOp::Sub => bin(BinOp::Sub),
        BinaryOp::Mul => bin(BinOp::Mul),
        BinaryOp::Div | BinaryOp::Mod if b == 0 => {
            Err(Stop::Revert(Revert(DIV_ZERO_MESSAGE.to_string())))
        }
        BinaryOp::Div => bin(BinOp::Div),
        BinaryOp::Mod => bin(BinOp::Mod),
        BinaryOp::And | BinaryOp::Or => {
            unreachable!("short-circuit operators handled by the caller")
        }
    }
}
