use std::fmt;

macro_rules! opcodes {
    ($($name:ident = $byte:literal, $imm:literal;)*) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Opcode {
            $($name,)*
        }

        impl Opcode {
            pub const ALL: &'static [Opcode] = &[$(Opcode::$name,)*];

            pub fn byte(self) -> u8 {
                match self {
                    $(Opcode::$name => $byte,)*
                }
            }

            /// Total immediate width in bytes.
            pub fn immediate_len(self) -> usize {
                match self {
                    $(Opcode::$name => $imm,)*
                }
            }

            pub fn mnemonic(self) -> &'static str {
                match self {
                    $(Opcode::$name => stringify!($name),)*
                }
            }

            pub fn from_byte(b: u8) -> Option<Opcode> {
                match b {
                    $($byte => Some(Opcode::$name),)*
                    _ => None,
                }
            }
        }
    };
}

opcodes! {
    STOP = 0x00, 0;
    ADD = 0x01, 0;
    MUL = 0x02, 0;
    SUB = 0x03, 0;
    DIV = 0x04, 0;
    MOD = 0x06, 0;
    LT = 0x10, 0;
    GT = 0x11, 0;
    LE = 0x12, 0;
    GE = 0x13, 0;
    EQ = 0x14, 0;
    NE = 0x15, 0;
    ISZERO = 0x16, 0;
    AND = 0x17, 0;
    OR = 0x18, 0;
    XOR = 0x19, 0;
    NOT = 0x1a, 0;
    SHL = 0x1b, 0;
    SHR = 0x1c, 0;
    CALLER = 0x33, 0;
    POP = 0x50, 0;
    SLOAD = 0x54, 2;
    SSTORE = 0x55, 2;
    JUMP = 0x56, 0;
    JUMPI = 0x57, 0;
    JUMPDEST = 0x5b, 0;
    SLOADK = 0x5c, 2;
    SSTOREK = 0x5d, 2;
    PUSH = 0x60, 8;
    DUP = 0x80, 1;
    SWAP = 0x90, 1;
    LOG = 0xa0, 3;
    ZKCONST = 0xe0, 4;
    RETURN = 0xf3, 0;
    REVERT = 0xfd, 2;
}

impl Opcode {
    pub fn size(self) -> usize {
        1 + self.immediate_len()
    }

    pub fn from_mnemonic(s: &str) -> Option<Opcode> {
        Opcode::ALL.iter().copied().find(|o| o.mnemonic() == s)
    }

    /// Instructions after which control never falls through.
    pub fn is_halt_or_jump(self) -> bool {
        matches!(
            self,
            Opcode::STOP | Opcode::RETURN | Opcode::REVERT | Opcode::JUMP
        )
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic())
    }
}

/// One decoded instruction. `a` is the first immediate; `b` only matters for LOG (argument count).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Insn {
    pub op: Opcode,
    pub a: u64,
    pub b: u64,
}

impl Insn {
    pub fn new(op: Opcode) -> Self {
        Insn { op, a: 0, b: 0 }
    }

    pub fn with(op: Opcode, a: u64) -> Self {
        Insn { op, a, b: 0 }
    }

    pub fn size(&self) -> usize {
        self.op.size()
    }

    pub fn encode_into(&self, out: &mut Vec<u8>) {
        out.push(self.op.byte());
        match self.op {
            Opcode::PUSH => out.extend_from_slice(&self.a.to_be_bytes()),
            Opcode::DUP | Opcode::SWAP => out.push(self.a as u8),
            Opcode::SLOAD | Opcode::SSTORE | Opcode::SLOADK | Opcode::SSTOREK | Opcode::REVERT => {
                out.extend_from_slice(&(self.a as u16).to_be_bytes())
            }
            Opcode::LOG => {
                out.extend_from_slice(&(self.a as u16).to_be_bytes());
                out.push(self.b as u8);
            }
            Opcode::ZKCONST => out.extend_from_slice(&(self.a as u32).to_be_bytes()),
            _ => {}
        }
    }
}

impl fmt::Display for Insn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.op.immediate_len() {
            0 => write!(f, "{}", self.op),
            _ if self.op == Opcode::LOG => write!(f, "{} {:#x} {:#x}", self.op, self.a, self.b),
            _ => write!(f, "{} {:#x}", self.op, self.a),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bytes_are_unique_and_round_trip() {
        for op in Opcode::ALL {
            assert_eq!(Opcode::from_byte(op.byte()), Some(*op));
            assert_eq!(Opcode::from_mnemonic(op.mnemonic()), Some(*op));
        }
    }

    #[test]
    fn encoding_widths() {
        let mut out = Vec::new();
        Insn::with(Opcode::PUSH, 5).encode_into(&mut out);
        assert_eq!(out, [0x60, 0, 0, 0, 0, 0, 0, 0, 5]);
        out.clear();
        Insn {
            op: Opcode::LOG,
            a: 1,
            b: 2,
        }
        .encode_into(&mut out);
        assert_eq!(out, [0xa0, 0, 1, 2]);
        assert_eq!(Insn::with(Opcode::PUSH, 5).to_string(), "PUSH 0x5");
    }
}
