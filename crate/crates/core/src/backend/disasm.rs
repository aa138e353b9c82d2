use std::collections::BTreeSet;

use thiserror::Error;

use super::opcode::{Insn, Opcode};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DisasmError {
    #[error("truncated immediate at offset {0:#06x}")]
    TruncatedImmediate(u32),
    #[error("unknown opcode {byte:#04x} at offset {offset:#06x}")]
    UnknownOpcode { offset: u32, byte: u8 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("jump at {offset:#06x} targets {target:#x}, which is not a JUMPDEST")]
    BadJumpTarget { offset: u32, target: u64 },
}

pub fn decode(code: &[u8]) -> Result<Vec<(u32, Insn)>, DisasmError> {
    let mut out = Vec::new();
    let mut pc = 0usize;
    while pc < code.len() {
        let offset = pc as u32;
        let op = Opcode::from_byte(code[pc]).ok_or(DisasmError::UnknownOpcode {
            offset,
            byte: code[pc],
        })?;
        let imm = code
            .get(pc + 1..pc + op.size())
            .ok_or(DisasmError::TruncatedImmediate(offset))?;
        let be = |bytes: &[u8]| bytes.iter().fold(0u64, |acc, b| (acc << 8) | *b as u64);
        let insn = match op {
            Opcode::LOG => Insn {
                op,
                a: be(&imm[..2]),
                b: imm[2] as u64,
            },
            _ => Insn::with(op, be(imm)),
        };
        out.push((offset, insn));
        pc += op.size();
    }
    Ok(out)
}

/// One line per instruction: `0x0000 PUSH 0x5`.
pub fn disassemble(code: &[u8]) -> Result<String, DisasmError> {
    let mut s = String::new();
    for (offset, insn) in decode(code)? {
        s.push_str(&format!("{offset:#06x} {insn}\n"));
    }
    Ok(s)
}

fn parse_num(tok: &str, line: usize) -> Result<u64, DisasmError> {
    let t = tok.trim_start_matches("0x");
    u64::from_str_radix(t, 16).map_err(|_| DisasmError::Parse {
        line,
        message: format!("bad immediate `{tok}`"),
    })
}

/// Inverse of [`disassemble`]. A leading offset column is optional and ignored.
pub fn assemble(listing: &str) -> Result<Vec<u8>, DisasmError> {
    let mut out = Vec::new();
    for (n, raw) in listing.lines().enumerate() {
        let line = n + 1;
        let mut toks: Vec<&str> = raw.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks[0].starts_with("0x") && toks.len() > 1 {
            toks.remove(0);
        }
        let op = Opcode::from_mnemonic(toks[0]).ok_or_else(|| DisasmError::Parse {
            line,
            message: format!("unknown mnemonic `{}`", toks[0]),
        })?;
        let want = match op {
            Opcode::LOG => 2,
            _ if op.immediate_len() > 0 => 1,
            _ => 0,
        };
        if toks.len() - 1 != want {
            return Err(DisasmError::Parse {
                line,
                message: format!("{op} takes {want} immediate(s)"),
            });
        }
        let a = if want > 0 {
            parse_num(toks[1], line)?
        } else {
            0
        };
        let b = if want > 1 {
            parse_num(toks[2], line)?
        } else {
            0
        };
        Insn { op, a, b }.encode_into(&mut out);
    }
    Ok(out)
}

/// Checks that every `PUSH t; JUMP|JUMPI` pair lands on a JUMPDEST.
pub fn verify_jump_targets(code: &[u8]) -> Result<(), DisasmError> {
    let insns = decode(code)?;
    let dests: BTreeSet<u64> = insns
        .iter()
        .filter(|(_, i)| i.op == Opcode::JUMPDEST)
        .map(|(o, _)| *o as u64)
        .collect();
    for w in insns.windows(2) {
        let (_, push) = w[0];
        let (offset, jump) = w[1];
        if push.op == Opcode::PUSH
            && matches!(jump.op, Opcode::JUMP | Opcode::JUMPI)
            && !dests.contains(&push.a)
        {
            return Err(DisasmError::BadJumpTarget {
                offset,
                target: push.a,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn push_add_listing() {
        let mut code = Vec::new();
        Insn::with(Opcode::PUSH, 5).encode_into(&mut code);
        Insn::new(Opcode::ADD).encode_into(&mut code);
        let text = disassemble(&code).unwrap();
        assert_eq!(text, "0x0000 PUSH 0x5\n0x0009 ADD\n");
        assert_eq!(assemble(&text).unwrap(), code);
        assert_eq!(disassemble(&[]).unwrap(), "");
    }

    #[test]
    fn malformed_input() {
        assert_eq!(
            decode(&[0x60, 0, 1]),
            Err(DisasmError::TruncatedImmediate(0))
        );
        assert!(matches!(
            decode(&[0xff]),
            Err(DisasmError::UnknownOpcode { .. })
        ));
        assert!(assemble("FROB").is_err());
        assert!(assemble("PUSH").is_err());
    }

    #[test]
    fn jump_into_data_is_caught() {
        let text = "PUSH 0xa\nJUMP\nJUMPDEST\nSTOP";
        assert!(verify_jump_targets(&assemble(text).unwrap()).is_ok());
        let text = "PUSH 0x3\nJUMP\nJUMPDEST\nSTOP";
        assert!(verify_jump_targets(&assemble(text).unwrap()).is_err());
    }
}
