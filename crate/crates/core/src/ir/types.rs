use std::collections::{BTreeMap, BTreeSet};

use crate::frontend::ast::Visibility;
use crate::model::{JumpType, Provenance};

/// Value ids coincide with the ir_id of the defining instruction.
pub type ValueId = u32;
pub type BlockId = u32;
pub type FuncId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    And,
    Or,
    Xor,
    Shl,
    Shr,
}

impl BinOp {
    pub fn name(self) -> &'static str {
        match self {
            BinOp::Add => "add",
            BinOp::Sub => "sub",
            BinOp::Mul => "mul",
            BinOp::Div => "div",
            BinOp::Mod => "mod",
            BinOp::And => "and",
            BinOp::Or => "or",
            BinOp::Xor => "xor",
            BinOp::Shl => "shl",
            BinOp::Shr => "shr",
        }
    }

    pub fn is_bitwise(self) -> bool {
        matches!(
            self,
            BinOp::And | BinOp::Or | BinOp::Xor | BinOp::Shl | BinOp::Shr
        )
    }

    /// 64-bit wrapping semantics shared by the folder, the interpreter and the VM.
    /// Division and modulo by zero yield 0; lowering guards them with a revert.
    pub fn eval(self, a: u64, b: u64) -> u64 {
        match self {
            BinOp::Add => a.wrapping_add(b),
            BinOp::Sub => a.wrapping_sub(b),
            BinOp::Mul => a.wrapping_mul(b),
            BinOp::Div => a.checked_div(b).unwrap_or(0),
            BinOp::Mod => a.checked_rem(b).unwrap_or(0),
            BinOp::And => a & b,
            BinOp::Or => a | b,
            BinOp::Xor => a ^ b,
            BinOp::Shl => {
                if b >= 64 {
                    0
                } else {
                    a << b
                }
            }
            BinOp::Shr => {
                if b >= 64 {
                    0
                } else {
                    a >> b
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
}

impl CmpOp {
    pub fn name(self) -> &'static str {
        match self {
            CmpOp::Eq => "eq",
            CmpOp::Ne => "ne",
            CmpOp::Lt => "lt",
            CmpOp::Gt => "gt",
            CmpOp::Le => "le",
            CmpOp::Ge => "ge",
        }
    }

    pub fn eval(self, a: u64, b: u64) -> u64 {
        let r = match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Gt => a > b,
            CmpOp::Le => a <= b,
            CmpOp::Ge => a >= b,
        };
        r as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BranchOrigin {
    Plain,
    /// Produced by `require`; carries its constraint index once assigned (0 = none yet).
    Require(u32),
    /// Guard in front of a division or modulo.
    DivGuard,
    /// Condition of a `for` loop header.
    ForLoop,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Op {
    Const(u64),
    Copy(ValueId),
    Binary(BinOp, ValueId, ValueId),
    Cmp(CmpOp, ValueId, ValueId),
    /// Logical negation: 1 if the operand is zero.
    Not(ValueId),
    Caller,
    Param(u32),
    LoadState {
        slot: u16,
    },
    StoreState {
        slot: u16,
        value: ValueId,
    },
    LoadKey {
        slot: u16,
        key: ValueId,
    },
    StoreKey {
        slot: u16,
        key: ValueId,
        value: ValueId,
    },
    Call {
        func: FuncId,
        args: Vec<ValueId>,
    },
    Phi(Vec<(BlockId, ValueId)>),
    EmitEvent {
        event: u16,
        args: Vec<ValueId>,
    },
    ZkConstraint {
        index: u32,
    },
    Jump(BlockId),
    Branch {
        cond: ValueId,
        then_to: BlockId,
        else_to: BlockId,
        origin: BranchOrigin,
    },
    Return(Option<ValueId>),
    Revert {
        message: u16,
    },
}

impl BranchOrigin {
    pub fn is_require(self) -> bool {
        matches!(self, BranchOrigin::Require(_))
    }
}

impl Op {
    pub fn is_terminator(&self) -> bool {
        matches!(
            self,
            Op::Jump(_) | Op::Branch { .. } | Op::Return(_) | Op::Revert { .. }
        )
    }

    /// Free of side effects and removable when unused.
    pub fn is_pure(&self) -> bool {
        matches!(
            self,
            Op::Const(_)
                | Op::Copy(_)
                | Op::Binary(..)
                | Op::Cmp(..)
                | Op::Not(_)
                | Op::Caller
                | Op::Param(_)
                | Op::LoadState { .. }
                | Op::LoadKey { .. }
                | Op::Phi(_)
        )
    }

    pub fn defines_value(&self) -> bool {
        !matches!(
            self,
            Op::StoreState { .. }
                | Op::StoreKey { .. }
                | Op::EmitEvent { .. }
                | Op::ZkConstraint { .. }
                | Op::Jump(_)
                | Op::Branch { .. }
                | Op::Return(_)
                | Op::Revert { .. }
        )
    }

    pub fn uses(&self) -> Vec<ValueId> {
        match self {
            Op::Copy(a) | Op::Not(a) => vec![*a],
            Op::Binary(_, a, b) | Op::Cmp(_, a, b) => vec![*a, *b],
            Op::StoreState { value, .. } => vec![*value],
            Op::LoadKey { key, .. } => vec![*key],
            Op::StoreKey { key, value, .. } => vec![*key, *value],
            Op::Call { args, .. } | Op::EmitEvent { args, .. } => args.clone(),
            Op::Phi(incoming) => incoming.iter().map(|(_, v)| *v).collect(),
            Op::Branch { cond, .. } => vec![*cond],
            Op::Return(Some(v)) => vec![*v],
            _ => Vec::new(),
        }
    }

    pub fn map_uses(&mut self, mut f: impl FnMut(ValueId) -> ValueId) {
        match self {
            Op::Copy(a) | Op::Not(a) => *a = f(*a),
            Op::Binary(_, a, b) | Op::Cmp(_, a, b) => {
                *a = f(*a);
                *b = f(*b);
            }
            Op::StoreState { value, .. } => *value = f(*value),
            Op::LoadKey { key, .. } => *key = f(*key),
            Op::StoreKey { key, value, .. } => {
                *key = f(*key);
                *value = f(*value);
            }
            Op::Call { args, .. } | Op::EmitEvent { args, .. } => {
                args.iter_mut().for_each(|a| *a = f(*a))
            }
            Op::Phi(incoming) => incoming.iter_mut().for_each(|(_, v)| *v = f(*v)),
            Op::Branch { cond, .. } => *cond = f(*cond),
            Op::Return(Some(v)) => *v = f(*v),
            _ => {}
        }
    }

    pub fn successors(&self) -> Vec<BlockId> {
        match self {
            Op::Jump(t) => vec![*t],
            Op::Branch {
                then_to, else_to, ..
            } => vec![*then_to, *else_to],
            _ => Vec::new(),
        }
    }

    pub fn map_targets(&mut self, mut f: impl FnMut(BlockId) -> BlockId) {
        match self {
            Op::Jump(t) => *t = f(*t),
            Op::Branch {
                then_to, else_to, ..
            } => {
                *then_to = f(*then_to);
                *else_to = f(*else_to);
            }
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instr {
    pub id: u32,
    pub op: Op,
    pub prov: Provenance,
    pub jump: JumpType,
    pub modifier_depth: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub id: BlockId,
    pub instrs: Vec<Instr>,
}

impl Block {
    pub fn terminator(&self) -> Option<&Instr> {
        self.instrs.last().filter(|i| i.op.is_terminator())
    }

    pub fn terminator_mut(&mut self) -> Option<&mut Instr> {
        self.instrs.last_mut().filter(|i| i.op.is_terminator())
    }

    pub fn successors(&self) -> Vec<BlockId> {
        self.terminator()
            .map_or_else(Vec::new, |t| t.op.successors())
    }

    pub fn first_non_phi(&self) -> Option<&Instr> {
        self.instrs.iter().find(|i| !matches!(i.op, Op::Phi(_)))
    }

    pub fn phi_count(&self) -> usize {
        self.instrs
            .iter()
            .take_while(|i| matches!(i.op, Op::Phi(_)))
            .count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrFunction {
    pub name: String,
    pub contract: usize,
    pub arity: u32,
    pub visibility: Visibility,
    pub returns_value: bool,
    /// Ordered; the first block is the entry.
    pub blocks: Vec<Block>,
    pub next_block: BlockId,
}

impl IrFunction {
    pub fn entry(&self) -> BlockId {
        self.blocks[0].id
    }

    pub fn block(&self, id: BlockId) -> &Block {
        self.blocks
            .iter()
            .find(|b| b.id == id)
            .expect("unknown block")
    }

    pub fn block_mut(&mut self, id: BlockId) -> &mut Block {
        self.blocks
            .iter_mut()
            .find(|b| b.id == id)
            .expect("unknown block")
    }

    pub fn has_block(&self, id: BlockId) -> bool {
        self.blocks.iter().any(|b| b.id == id)
    }

    pub fn new_block(&mut self) -> BlockId {
        let id = self.next_block;
        self.next_block += 1;
        self.blocks.push(Block {
            id,
            instrs: Vec::new(),
        });
        id
    }

    pub fn predecessors(&self) -> BTreeMap<BlockId, Vec<BlockId>> {
        let mut preds: BTreeMap<BlockId, Vec<BlockId>> =
            self.blocks.iter().map(|b| (b.id, Vec::new())).collect();
        for b in &self.blocks {
            for s in b.successors() {
                let p = preds.entry(s).or_default();
                if !p.contains(&b.id) {
                    p.push(b.id);
                }
            }
        }
        preds
    }

    pub fn instrs(&self) -> impl Iterator<Item = &Instr> {
        self.blocks.iter().flat_map(|b| b.instrs.iter())
    }

    pub fn instrs_mut(&mut self) -> impl Iterator<Item = &mut Instr> {
        self.blocks.iter_mut().flat_map(|b| b.instrs.iter_mut())
    }

    pub fn instr_count(&self) -> usize {
        self.blocks.iter().map(|b| b.instrs.len()).sum()
    }

    /// Blocks reachable from the entry, in reverse post-order.
    pub fn reverse_postorder(&self) -> Vec<BlockId> {
        let mut seen = BTreeSet::new();
        let mut post = Vec::new();
        let mut stack = vec![(self.entry(), 0usize)];
        seen.insert(self.entry());
        while let Some((b, i)) = stack.pop() {
            let succ = self.block(b).successors();
            if i < succ.len() {
                stack.push((b, i + 1));
                let s = succ[i];
                if seen.insert(s) {
                    stack.push((s, 0));
                }
            } else {
                post.push(b);
            }
        }
        post.reverse();
        post
    }

    /// Replaces every use of a value according to `map`, following chains.
    pub fn replace_uses(&mut self, map: &BTreeMap<ValueId, ValueId>) {
        if map.is_empty() {
            return;
        }
        let resolve = |mut v: ValueId| {
            let mut guard = 0;
            while let Some(&n) = map.get(&v) {
                if n == v || guard > map.len() {
                    break;
                }
                v = n;
                guard += 1;
            }
            v
        };
        for i in self.instrs_mut() {
            i.op.map_uses(resolve);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventSig {
    pub name: String,
    pub arity: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSlot {
    pub name: String,
    pub mapping: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IrModule {
    pub contracts: Vec<String>,
    pub functions: Vec<IrFunction>,
    pub strings: Vec<String>,
    pub events: Vec<EventSig>,
    pub state: Vec<StateSlot>,
    pub initial_storage: Vec<(u16, u64)>,
    pub next_id: u32,
}

impl IrModule {
    pub fn fresh_id(&mut self) -> u32 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    pub fn intern_string(&mut self, s: &str) -> u16 {
        match self.strings.iter().position(|x| x == s) {
            Some(i) => i as u16,
            None => {
                self.strings.push(s.to_string());
                (self.strings.len() - 1) as u16
            }
        }
    }

    pub fn instrs(&self) -> impl Iterator<Item = &Instr> {
        self.functions.iter().flat_map(|f| f.instrs())
    }

    pub fn instr_count(&self) -> usize {
        self.functions.iter().map(|f| f.instr_count()).sum()
    }

    pub fn instr_index(&self) -> BTreeMap<u32, &Instr> {
        self.instrs().map(|i| (i.id, i)).collect()
    }

    pub fn ids(&self) -> BTreeSet<u32> {
        self.instrs().map(|i| i.id).collect()
    }

    pub fn find_function(&self, name: &str, arity: u32) -> Option<FuncId> {
        self.functions
            .iter()
            .position(|f| f.name == name && f.arity == arity)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binop_edge_cases() {
        assert_eq!(BinOp::Sub.eval(0, 1), u64::MAX);
        assert_eq!(BinOp::Div.eval(7, 0), 0);
        assert_eq!(BinOp::Mod.eval(7, 0), 0);
        assert_eq!(BinOp::Shl.eval(1, 64), 0);
        assert_eq!(BinOp::Shr.eval(u64::MAX, 63), 1);
        assert_eq!(CmpOp::Le.eval(3, 3), 1);
    }

    #[test]
    fn op_classification() {
        assert!(Op::Jump(0).is_terminator());
        assert!(!Op::StoreState { slot: 0, value: 1 }.is_pure());
        assert!(Op::LoadState { slot: 0 }.is_pure());
        assert!(!Op::ZkConstraint { index: 1 }.defines_value());
        let mut op = Op::StoreKey {
            slot: 0,
            key: 1,
            value: 2,
        };
        op.map_uses(|v| v + 10);
        assert_eq!(op.uses(), vec![11, 12]);
    }
}
