//! Stack-machine code generation.

mod disasm;
mod emit;
mod opcode;

pub use disasm::{assemble, decode, disassemble, verify_jump_targets, DisasmError};
pub use emit::{
    emit, BytecodeProgram, EmitError, EventEntry, FunctionEntry, LogEntry, OffsetLog, StorageSlot,
    MAX_STACK_REACH,
};
pub use opcode::{Insn, Opcode};
