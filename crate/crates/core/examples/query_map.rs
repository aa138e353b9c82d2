//! Forward and reverse lookups: bytecode offset to source, and source span to offsets.

use zkmap::corpus::{bundled_dir, load_fixture};
use zkmap::mapgen::{query_offset, query_span};
use zkmap::optimizer::PassConfig;
use zkmap::pipeline::compile;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fx = load_fixture(&bundled_dir().join("zkvoting.msol"))?;
    let c = compile(&fx.source, &fx.file_name(), &PassConfig::default())?;
    let table = c.table.as_ref().expect("mapping is on");

    for offset in [0u32, 0x20, 0x40, 0x80] {
        match query_offset(table, &c.program.code, offset)? {
            Some(e) => {
                let (line, col) = e.span.line_col(&c.source);
                println!(
                    "{offset:#06x} -> {} at {line}:{col} `{}`",
                    e.span,
                    e.span.snippet(&c.source).trim()
                );
            }
            None => println!("{offset:#06x} -> unmapped"),
        }
    }

    let require = fx
        .source
        .find("require(!hasVoted")
        .expect("fixture has the require");
    let e = table
        .entries
        .iter()
        .find(|e| e.span.start as usize == require)
        .expect("require is mapped");
    let offsets: Vec<String> = query_span(table, e.span)
        .iter()
        .map(|o| format!("{o:#06x}"))
        .collect();
    println!("{} covers {}", e.span, offsets.join(" "));
    Ok(())
}
