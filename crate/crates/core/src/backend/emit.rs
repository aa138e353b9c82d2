use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::opcode::{Insn, Opcode};
use crate::frontend::ast::Visibility;
use crate::ir::{BinOp, BlockId, CmpOp, FuncId, IrFunction, IrModule, Op, ValueId};
use crate::model::JumpType;

/// DUP and SWAP reach at most this deep.
pub const MAX_STACK_REACH: usize = 255;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmitError {
    #[error("function {function} needs stack reach {needed}, limit is {MAX_STACK_REACH}")]
    StackTooDeep { function: String, needed: usize },
    #[error("program exceeds the 32-bit offset range")]
    JumpTargetOverflow,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionEntry {
    pub contract: String,
    pub name: String,
    pub arity: u32,
    pub offset: u32,
    pub external: bool,
    pub returns_value: bool,
}

impl FunctionEntry {
    pub fn key(&self) -> String {
        format!("{}/{}", self.name, self.arity)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventEntry {
    pub name: String,
    pub arity: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StorageSlot {
    pub name: String,
    pub mapping: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BytecodeProgram {
    #[serde(with = "hex::serde")]
    pub code: Vec<u8>,
    pub functions: Vec<FunctionEntry>,
    pub strings: Vec<String>,
    pub events: Vec<EventEntry>,
    pub storage: Vec<StorageSlot>,
    /// Non-zero state initializers, applied when a fresh deployment starts.
    pub initial_storage: Vec<(u16, u64)>,
}

impl BytecodeProgram {
    /// Looks a function up by `name`, `Contract.name`, or either with a `/arity` suffix.
    pub fn find_function(&self, spec: &str) -> Option<&FunctionEntry> {
        let (path, arity) = match spec.rsplit_once('/') {
            Some((p, a)) => (p, a.parse::<u32>().ok()),
            None => (spec, None),
        };
        let (contract, name) = match path.split_once('.') {
            Some((c, n)) => (Some(c), n),
            None => (None, path),
        };
        let mut hits = self.functions.iter().filter(|f| {
            f.name == name
                && contract.is_none_or(|c| f.contract == c)
                && arity.is_none_or(|a| f.arity == a)
        });
        let first = hits.next()?;
        // Prefer an external entry point when the bare name is ambiguous.
        Some(hits.chain([first]).find(|f| f.external).unwrap_or(first))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    pub offset: u32,
    pub ir_id: u32,
    pub jump: JumpType,
}

/// Which IR instruction every emitted bytecode instruction implements, in emission order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OffsetLog {
    pub entries: Vec<LogEntry>,
}

impl OffsetLog {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

type Label = usize;

struct Item {
    insn: Insn,
    ir: u32,
    jump: JumpType,
    target: Option<Label>,
    defines: Option<Label>,
}

struct Emitter {
    items: Vec<Item>,
    labels: usize,
    block_labels: BTreeMap<(FuncId, BlockId), Label>,
}

impl Emitter {
    fn label(&mut self) -> Label {
        self.labels += 1;
        self.labels - 1
    }
}

struct Frame<'a> {
    f: &'a IrFunction,
    fid: FuncId,
    pos: BTreeMap<ValueId, usize>,
    size: usize,
    height: usize,
    internal: bool,
}

pub fn emit(m: &IrModule) -> Result<(BytecodeProgram, OffsetLog), EmitError> {
    let mut e = Emitter {
        items: Vec::new(),
        labels: 0,
        block_labels: BTreeMap::new(),
    };
    for (fi, f) in m.functions.iter().enumerate() {
        for b in &f.blocks {
            let l = e.label();
            e.block_labels.insert((fi, b.id), l);
        }
    }
    for (fi, f) in m.functions.iter().enumerate() {
        emit_function(&mut e, m, fi, f)?;
    }

    let mut label_at = vec![0u32; e.labels];
    let mut offset: u64 = 0;
    for it in &e.items {
        if let Some(l) = it.defines {
            label_at[l] = offset as u32;
        }
        offset += it.insn.size() as u64;
    }
    if offset > u32::MAX as u64 {
        return Err(EmitError::JumpTargetOverflow);
    }
    let mut code = Vec::with_capacity(offset as usize);
    let mut log = OffsetLog::default();
    for it in &e.items {
        let mut insn = it.insn;
        if let Some(l) = it.target {
            insn.a = label_at[l] as u64;
        }
        log.entries.push(LogEntry {
            offset: code.len() as u32,
            ir_id: it.ir,
            jump: it.jump,
        });
        insn.encode_into(&mut code);
    }
    let functions = m
        .functions
        .iter()
        .enumerate()
        .map(|(fi, f)| FunctionEntry {
            contract: m.contracts.get(f.contract).cloned().unwrap_or_default(),
            name: f.name.clone(),
            arity: f.arity,
            offset: label_at[e.block_labels[&(fi, f.entry())]],
            external: f.visibility == Visibility::External,
            returns_value: f.returns_value,
        })
        .collect();
    let program = BytecodeProgram {
        code,
        functions,
        strings: m.strings.clone(),
        events: m
            .events
            .iter()
            .map(|ev| EventEntry {
                name: ev.name.clone(),
                arity: ev.arity,
            })
            .collect(),
        storage: m
            .state
            .iter()
            .map(|s| StorageSlot {
                name: s.name.clone(),
                mapping: s.mapping,
            })
            .collect(),
        initial_storage: m.initial_storage.clone(),
    };
    Ok((program, log))
}

fn binop(op: BinOp) -> Opcode {
    match op {
        BinOp::Add => Opcode::ADD,
        BinOp::Sub => Opcode::SUB,
        BinOp::Mul => Opcode::MUL,
        BinOp::Div => Opcode::DIV,
        BinOp::Mod => Opcode::MOD,
        BinOp::And => Opcode::AND,
        BinOp::Or => Opcode::OR,
        BinOp::Xor => Opcode::XOR,
        BinOp::Shl => Opcode::SHL,
        BinOp::Shr => Opcode::SHR,
    }
}

fn cmpop(op: CmpOp) -> Opcode {
    match op {
        CmpOp::Eq => Opcode::EQ,
        CmpOp::Ne => Opcode::NE,
        CmpOp::Lt => Opcode::LT,
        CmpOp::Gt => Opcode::GT,
        CmpOp::Le => Opcode::LE,
        CmpOp::Ge => Opcode::GE,
    }
}

impl Frame<'_> {
    fn put(&mut self, e: &mut Emitter, insn: Insn, ir: u32) -> Result<(), EmitError> {
        if matches!(insn.op, Opcode::DUP | Opcode::SWAP) && insn.a as usize > MAX_STACK_REACH {
            return Err(EmitError::StackTooDeep {
                function: self.f.name.clone(),
                needed: insn.a as usize,
            });
        }
        e.items.push(Item {
            insn,
            ir,
            jump: JumpType::Regular,
            target: None,
            defines: None,
        });
        Ok(())
    }

    fn op(&mut self, e: &mut Emitter, op: Opcode, ir: u32) -> Result<(), EmitError> {
        self.put(e, Insn::new(op), ir)
    }

    fn push_label(&mut self, e: &mut Emitter, l: Label, ir: u32) {
        e.items.push(Item {
            insn: Insn::with(Opcode::PUSH, 0),
            ir,
            jump: JumpType::Regular,
            target: Some(l),
            defines: None,
        });
        self.height += 1;
    }

    fn dest(&mut self, e: &mut Emitter, l: Label, ir: u32) {
        e.items.push(Item {
            insn: Insn::new(Opcode::JUMPDEST),
            ir,
            jump: JumpType::Regular,
            target: None,
            defines: Some(l),
        });
    }

    fn dup(&mut self, e: &mut Emitter, v: ValueId, ir: u32) -> Result<(), EmitError> {
        let p = self.pos[&v];
        self.put(e, Insn::with(Opcode::DUP, (self.height - p) as u64), ir)?;
        self.height += 1;
        Ok(())
    }

    /// Moves the stack top into the frame slot of `v`.
    fn store(&mut self, e: &mut Emitter, v: ValueId, ir: u32) -> Result<(), EmitError> {
        let p = self.pos[&v];
        self.put(
            e,
            Insn::with(Opcode::SWAP, (self.height - p - 1) as u64),
            ir,
        )?;
        self.op(e, Opcode::POP, ir)?;
        self.height -= 1;
        Ok(())
    }

    fn phi_copies(
        &mut self,
        e: &mut Emitter,
        pred: BlockId,
        target: BlockId,
        ir: u32,
    ) -> Result<(), EmitError> {
        let moves: Vec<(ValueId, ValueId)> = self
            .f
            .block(target)
            .instrs
            .iter()
            .filter_map(|i| match &i.op {
                Op::Phi(inc) => inc
                    .iter()
                    .find(|(p, _)| *p == pred)
                    .map(|(_, v)| (i.id, *v)),
                _ => None,
            })
            .collect();
        // Read every source before writing any phi slot.
        for (_, v) in &moves {
            self.dup(e, *v, ir)?;
        }
        for (phi, _) in moves.iter().rev() {
            self.store(e, *phi, ir)?;
        }
        Ok(())
    }

    fn jump_to(
        &mut self,
        e: &mut Emitter,
        pred: BlockId,
        target: BlockId,
        ir: u32,
    ) -> Result<(), EmitError> {
        self.phi_copies(e, pred, target, ir)?;
        let l = e.block_labels[&(self.fid, target)];
        self.push_label(e, l, ir);
        self.op(e, Opcode::JUMP, ir)?;
        self.height -= 1;
        Ok(())
    }
}

fn emit_function(
    e: &mut Emitter,
    m: &IrModule,
    fid: FuncId,
    f: &IrFunction,
) -> Result<(), EmitError> {
    let internal = f.visibility == Visibility::Internal;
    let base = f.arity as usize + internal as usize;
    let mut pos = BTreeMap::new();
    let mut slots = 0;
    for i in f.instrs() {
        match i.op {
            Op::Param(k) => {
                pos.insert(i.id, k as usize + internal as usize);
            }
            _ if i.op.defines_value() => {
                pos.insert(i.id, base + slots);
                slots += 1;
            }
            _ => {}
        }
    }
    let mut fr = Frame {
        f,
        fid,
        pos,
        size: base + slots,
        height: base,
        internal,
    };
    let mut trampolines: Vec<(Label, BlockId, BlockId, u32)> = Vec::new();

    for (bi, b) in f.blocks.iter().enumerate() {
        let lead = b
            .instrs
            .iter()
            .find(|i| !matches!(i.op, Op::Phi(_) | Op::Param(_)))
            .map_or(0, |i| i.id);
        fr.dest(e, e.block_labels[&(fid, b.id)], lead);
        if bi == 0 {
            for _ in 0..slots {
                fr.put(e, Insn::with(Opcode::PUSH, 0), lead)?;
            }
        }
        fr.height = fr.size;
        for i in &b.instrs {
            let id = i.id;
            match &i.op {
                Op::Param(_) | Op::Phi(_) => {}
                Op::Const(c) => {
                    fr.put(e, Insn::with(Opcode::PUSH, *c), id)?;
                    fr.height += 1;
                    fr.store(e, id, id)?;
                }
                Op::Copy(a) => {
                    fr.dup(e, *a, id)?;
                    fr.store(e, id, id)?;
                }
                Op::Binary(op, a, b2) => {
                    fr.dup(e, *a, id)?;
                    fr.dup(e, *b2, id)?;
                    fr.op(e, binop(*op), id)?;
                    fr.height -= 1;
                    fr.store(e, id, id)?;
                }
                Op::Cmp(op, a, b2) => {
                    fr.dup(e, *a, id)?;
                    fr.dup(e, *b2, id)?;
                    fr.op(e, cmpop(*op), id)?;
                    fr.height -= 1;
                    fr.store(e, id, id)?;
                }
                Op::Not(a) => {
                    fr.dup(e, *a, id)?;
                    fr.op(e, Opcode::ISZERO, id)?;
                    fr.store(e, id, id)?;
                }
                Op::Caller => {
                    fr.op(e, Opcode::CALLER, id)?;
                    fr.height += 1;
                    fr.store(e, id, id)?;
                }
                Op::LoadState { slot } => {
                    fr.put(e, Insn::with(Opcode::SLOAD, *slot as u64), id)?;
                    fr.height += 1;
                    fr.store(e, id, id)?;
                }
                Op::StoreState { slot, value } => {
                    fr.dup(e, *value, id)?;
                    fr.put(e, Insn::with(Opcode::SSTORE, *slot as u64), id)?;
                    fr.height -= 1;
                }
                Op::LoadKey { slot, key } => {
                    fr.dup(e, *key, id)?;
                    fr.put(e, Insn::with(Opcode::SLOADK, *slot as u64), id)?;
                    fr.store(e, id, id)?;
                }
                Op::StoreKey { slot, key, value } => {
                    fr.dup(e, *value, id)?;
                    fr.dup(e, *key, id)?;
                    fr.put(e, Insn::with(Opcode::SSTOREK, *slot as u64), id)?;
                    fr.height -= 2;
                }
                Op::EmitEvent { event, args } => {
                    for a in args {
                        fr.dup(e, *a, id)?;
                    }
                    fr.put(
                        e,
                        Insn {
                            op: Opcode::LOG,
                            a: *event as u64,
                            b: args.len() as u64,
                        },
                        id,
                    )?;
                    fr.height -= args.len();
                }
                Op::ZkConstraint { index } => {
                    fr.put(e, Insn::with(Opcode::ZKCONST, *index as u64), id)?
                }
                Op::Call { func, args } => {
                    let ret = e.label();
                    fr.push_label(e, ret, id);
                    for a in args {
                        fr.dup(e, *a, id)?;
                    }
                    let callee = &m.functions[*func];
                    fr.push_label(e, e.block_labels[&(*func, callee.entry())], id);
                    fr.op(e, Opcode::JUMP, id)?;
                    e.items.last_mut().unwrap().jump = JumpType::Into;
                    fr.height -= 2 + args.len();
                    fr.dest(e, ret, id);
                    if callee.returns_value {
                        fr.height += 1;
                        fr.store(e, id, id)?;
                    }
                }
                Op::Jump(t) => fr.jump_to(e, b.id, *t, id)?,
                Op::Branch {
                    cond,
                    then_to,
                    else_to,
                    ..
                } => {
                    fr.dup(e, *cond, id)?;
                    let then_label = if f.block(*then_to).phi_count() > 0 {
                        let l = e.label();
                        trampolines.push((l, b.id, *then_to, id));
                        l
                    } else {
                        e.block_labels[&(fid, *then_to)]
                    };
                    fr.push_label(e, then_label, id);
                    fr.op(e, Opcode::JUMPI, id)?;
                    fr.height -= 2;
                    fr.jump_to(e, b.id, *else_to, id)?;
                }
                Op::Return(v) => emit_return(e, &mut fr, *v, id)?,
                Op::Revert { message } => {
                    fr.put(e, Insn::with(Opcode::REVERT, *message as u64), id)?
                }
            }
        }
    }
    for (l, pred, target, ir) in trampolines {
        fr.dest(e, l, ir);
        fr.height = fr.size;
        fr.jump_to(e, pred, target, ir)?;
    }
    Ok(())
}

fn emit_return(
    e: &mut Emitter,
    fr: &mut Frame,
    v: Option<ValueId>,
    id: u32,
) -> Result<(), EmitError> {
    if !fr.internal {
        return match v {
            Some(v) if fr.f.returns_value => {
                fr.dup(e, v, id)?;
                fr.op(e, Opcode::RETURN, id)
            }
            None if fr.f.returns_value => {
                fr.put(e, Insn::with(Opcode::PUSH, 0), id)?;
                fr.op(e, Opcode::RETURN, id)
            }
            _ => fr.op(e, Opcode::STOP, id),
        };
    }
    // Frame layout: [ret, args.., slots..]. Leave only the result (if any) and jump back.
    let size = fr.size;
    match v {
        Some(v) if fr.f.returns_value => {
            fr.dup(e, v, id)?;
            fr.put(e, Insn::with(Opcode::SWAP, size as u64), id)?;
        }
        None if fr.f.returns_value => {
            fr.put(e, Insn::with(Opcode::PUSH, 0), id)?;
            fr.put(e, Insn::with(Opcode::SWAP, size as u64), id)?;
        }
        _ if size > 1 => fr.put(e, Insn::with(Opcode::SWAP, size as u64 - 1), id)?,
        _ => {}
    }
    for _ in 1..size {
        fr.put(e, Insn::with(Opcode::SWAP, 1), id)?;
        fr.op(e, Opcode::POP, id)?;
    }
    fr.op(e, Opcode::JUMP, id)?;
    e.items.last_mut().unwrap().jump = JumpType::OutOf;
    Ok(())
}
