use std::collections::BTreeMap;

use super::state::{EventRecord, ExecError, ExecResult, Status, Storage, StorageKey, TxInput};
use crate::backend::{decode, BytecodeProgram, Insn, Opcode};
use crate::ir::{BinOp, CmpOp};

pub const VM_STEP_LIMIT: u64 = 10_000_000;
pub const MAX_STACK: usize = 1024;

/// Decoded program, reusable across transactions.
pub struct Vm<'a> {
    program: &'a BytecodeProgram,
    insns: Vec<(u32, Insn)>,
    at: BTreeMap<u32, usize>,
    pub step_limit: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VmRun {
    pub result: ExecResult,
    /// Offset of every executed instruction, in order.
    pub offsets: Vec<u32>,
}

impl<'a> Vm<'a> {
    pub fn new(program: &'a BytecodeProgram) -> Result<Self, ExecError> {
        let insns = decode(&program.code).map_err(|_| ExecError::BadCode(0))?;
        let at = insns
            .iter()
            .enumerate()
            .map(|(k, (o, _))| (*o, k))
            .collect();
        Ok(Vm {
            program,
            insns,
            at,
            step_limit: VM_STEP_LIMIT,
        })
    }

    pub fn run(&self, storage: &Storage, tx: &TxInput) -> Result<VmRun, ExecError> {
        let spec = if tx.function.contains('/') {
            tx.function.clone()
        } else {
            format!("{}/{}", tx.function, tx.args.len())
        };
        let entry = self
            .program
            .find_function(&spec)
            .filter(|f| f.external)
            .ok_or_else(|| ExecError::UnknownFunction(tx.function.clone()))?;
        if entry.arity as usize != tx.args.len() {
            return Err(ExecError::ArityMismatch {
                function: tx.function.clone(),
                expected: entry.arity as usize,
                got: tx.args.len(),
            });
        }
        let mut pc = *self
            .at
            .get(&entry.offset)
            .ok_or(ExecError::BadCode(entry.offset))?;
        let mut stack: Vec<u64> = tx.args.clone();
        let mut st = storage.clone();
        let mut events = Vec::new();
        let mut offsets = Vec::new();
        let mut steps = 0u64;

        let status = loop {
            let Some(&(off, insn)) = self.insns.get(pc) else {
                return Err(ExecError::BadCode(self.program.code.len() as u32));
            };
            steps += 1;
            if steps > self.step_limit {
                return Err(ExecError::StepLimit(self.step_limit));
            }
            offsets.push(off);
            pc += 1;
            let pop = |s: &mut Vec<u64>| s.pop().ok_or(ExecError::StackUnderflow(off));
            let push = |s: &mut Vec<u64>, v: u64| {
                if s.len() >= MAX_STACK {
                    return Err(ExecError::StackOverflow(off));
                }
                s.push(v);
                Ok(())
            };
            match insn.op {
                Opcode::STOP => break Status::Returned(None),
                Opcode::RETURN => break Status::Returned(Some(pop(&mut stack)?)),
                Opcode::REVERT => {
                    let msg = self
                        .program
                        .strings
                        .get(insn.a as usize)
                        .cloned()
                        .unwrap_or_default();
                    break Status::Reverted(msg);
                }
                Opcode::ADD
                | Opcode::SUB
                | Opcode::MUL
                | Opcode::DIV
                | Opcode::MOD
                | Opcode::AND
                | Opcode::OR
                | Opcode::XOR
                | Opcode::SHL
                | Opcode::SHR => {
                    let b = pop(&mut stack)?;
                    let a = pop(&mut stack)?;
                    push(&mut stack, binop(insn.op).eval(a, b))?;
                }
                Opcode::LT | Opcode::GT | Opcode::LE | Opcode::GE | Opcode::EQ | Opcode::NE => {
                    let b = pop(&mut stack)?;
                    let a = pop(&mut stack)?;
                    push(&mut stack, cmpop(insn.op).eval(a, b))?;
                }
                Opcode::ISZERO => {
                    let a = pop(&mut stack)?;
                    push(&mut stack, (a == 0) as u64)?;
                }
                Opcode::NOT => {
                    let a = pop(&mut stack)?;
                    push(&mut stack, !a)?;
                }
                Opcode::CALLER => push(&mut stack, tx.sender)?,
                Opcode::POP => {
                    pop(&mut stack)?;
                }
                Opcode::PUSH => push(&mut stack, insn.a)?,
                Opcode::DUP => {
                    let n = insn.a as usize;
                    if n == 0 || n > stack.len() {
                        return Err(ExecError::StackUnderflow(off));
                    }
                    let v = stack[stack.len() - n];
                    push(&mut stack, v)?;
                }
                Opcode::SWAP => {
                    let n = insn.a as usize;
                    let len = stack.len();
                    if n == 0 || n + 1 > len {
                        return Err(ExecError::StackUnderflow(off));
                    }
                    stack.swap(len - 1, len - 1 - n);
                }
                Opcode::SLOAD => {
                    let v = st.get(StorageKey {
                        slot: insn.a as u16,
                        key: None,
                    });
                    push(&mut stack, v)?;
                }
                Opcode::SSTORE => {
                    let v = pop(&mut stack)?;
                    st.set(
                        StorageKey {
                            slot: insn.a as u16,
                            key: None,
                        },
                        v,
                    );
                }
                Opcode::SLOADK => {
                    let k = pop(&mut stack)?;
                    let v = st.get(StorageKey {
                        slot: insn.a as u16,
                        key: Some(k),
                    });
                    push(&mut stack, v)?;
                }
                Opcode::SSTOREK => {
                    let k = pop(&mut stack)?;
                    let v = pop(&mut stack)?;
                    st.set(
                        StorageKey {
                            slot: insn.a as u16,
                            key: Some(k),
                        },
                        v,
                    );
                }
                Opcode::JUMP => {
                    let t = pop(&mut stack)?;
                    pc = self.target(off, t)?;
                }
                Opcode::JUMPI => {
                    let t = pop(&mut stack)?;
                    let c = pop(&mut stack)?;
                    if c != 0 {
                        pc = self.target(off, t)?;
                    }
                }
                Opcode::JUMPDEST | Opcode::ZKCONST => {}
                Opcode::LOG => {
                    let n = insn.b as usize;
                    if n > stack.len() {
                        return Err(ExecError::StackUnderflow(off));
                    }
                    let args = stack.split_off(stack.len() - n);
                    let ev = insn.a as usize;
                    events.push(EventRecord {
                        event: ev as u16,
                        name: self
                            .program
                            .events
                            .get(ev)
                            .map(|e| e.name.clone())
                            .unwrap_or_default(),
                        args,
                    });
                }
            }
        };
        let result = match status {
            Status::Reverted(_) => ExecResult {
                status,
                storage: storage.clone(),
                events: Vec::new(),
            },
            Status::Returned(_) => ExecResult {
                status,
                storage: st,
                events,
            },
        };
        Ok(VmRun { result, offsets })
    }

    fn target(&self, off: u32, t: u64) -> Result<usize, ExecError> {
        let invalid = ExecError::InvalidJump {
            offset: off,
            target: t,
        };
        let t32 = u32::try_from(t).map_err(|_| invalid.clone())?;
        match self.at.get(&t32) {
            Some(&k) if self.insns[k].1.op == Opcode::JUMPDEST => Ok(k),
            _ => Err(invalid),
        }
    }
}

fn binop(op: Opcode) -> BinOp {
    match op {
        Opcode::ADD => BinOp::Add,
        Opcode::SUB => BinOp::Sub,
        Opcode::MUL => BinOp::Mul,
        Opcode::DIV => BinOp::Div,
        Opcode::MOD => BinOp::Mod,
        Opcode::AND => BinOp::And,
        Opcode::OR => BinOp::Or,
        Opcode::XOR => BinOp::Xor,
        Opcode::SHL => BinOp::Shl,
        _ => BinOp::Shr,
    }
}

fn cmpop(op: Opcode) -> CmpOp {
    match op {
        Opcode::LT => CmpOp::Lt,
        Opcode::GT => CmpOp::Gt,
        Opcode::LE => CmpOp::Le,
        Opcode::GE => CmpOp::Ge,
        Opcode::EQ => CmpOp::Eq,
        _ => CmpOp::Ne,
    }
}
