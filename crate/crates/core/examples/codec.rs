//! The compressed `s:l:f:j:m` encoding: export, decode, and how much the delta form saves.

use zkmap::corpus::{bundled_dir, load_fixture};
use zkmap::mapgen::{export, ExportFormat};
use zkmap::model::{decode_compressed, encode_stream};
use zkmap::optimizer::PassConfig;
use zkmap::pipeline::compile;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fx = load_fixture(&bundled_dir().join("auction.msol"))?;
    let c = compile(&fx.source, &fx.file_name(), &PassConfig::default())?;
    let table = c.table.as_ref().expect("mapping is on");
    let compressed = export(table, ExportFormat::Compressed);
    let rich = export(table, ExportFormat::Rich);
    let stream = decode_compressed(&compressed)?;
    assert_eq!(encode_stream(&stream), compressed);
    println!(
        "{} entries: {} bytes compressed, {} bytes rich",
        stream.len(),
        compressed.len(),
        rich.len()
    );
    println!("{}", &compressed[..compressed.len().min(120)]);
    Ok(())
}
