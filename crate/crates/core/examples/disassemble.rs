//! Disassembles a fixture, annotating each instruction with the source it maps to, and reassembles it.

use zkmap::backend::{assemble, decode, disassemble};
use zkmap::corpus::{bundled_dir, load_fixture};
use zkmap::optimizer::PassConfig;
use zkmap::pipeline::compile;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fx = load_fixture(&bundled_dir().join("loop_sum.msol"))?;
    let c = compile(&fx.source, &fx.file_name(), &PassConfig::default())?;
    let table = c.table.as_ref().expect("mapping is on");
    for (offset, insn) in decode(&c.program.code)? {
        let src = table.entry_at(offset).map_or("", |e| {
            e.span
                .snippet(&c.source)
                .lines()
                .next()
                .unwrap_or("")
                .trim()
        });
        println!("{offset:#06x} {:<20} {src}", insn.to_string());
    }
    let listing = disassemble(&c.program.code)?;
    assert_eq!(assemble(&listing)?, c.program.code);
    Ok(())
}
