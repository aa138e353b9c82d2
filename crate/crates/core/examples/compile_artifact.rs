//! Compiles the ZKVoting fixture and writes the artifact plus both source map exports.

use zkmap::artifact::Artifact;
use zkmap::corpus::{bundled_dir, load_fixture};
use zkmap::mapgen::{export, ExportFormat};
use zkmap::optimizer::PassConfig;
use zkmap::pipeline::compile;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fx = load_fixture(&bundled_dir().join("zkvoting.msol"))?;
    let c = compile(&fx.source, &fx.file_name(), &PassConfig::default())?;
    let table = c.table.as_ref().expect("mapping is on by default");
    println!(
        "{} bytes of bytecode, {} map entries, passes: {}",
        c.program.code.len(),
        table.entries.len(),
        c.config
            .passes
            .iter()
            .map(|p| p.name())
            .collect::<Vec<_>>()
            .join(",")
    );
    println!("compressed: {}", export(table, ExportFormat::Compressed));

    let out = std::env::temp_dir().join("zkvoting.zkb.json");
    let artifact = Artifact::from_compilation(&c, false);
    std::fs::write(&out, artifact.to_json())?;
    let back = Artifact::from_json(&std::fs::read_to_string(&out)?)?;
    assert_eq!(back, artifact);
    println!("artifact written to {}", out.display());
    Ok(())
}
