//! Compile time with and without source mapping over the bundled corpus.

use zkmap::bench::render_overhead;
use zkmap::corpus::load_bundled;
use zkmap::exec::{measure_overhead, DEFAULT_REPETITIONS};
use zkmap::optimizer::PassConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sources: Vec<(String, String)> = load_bundled()?
        .into_iter()
        .map(|f| (f.file_name(), f.source))
        .collect();
    let report = measure_overhead(&sources, &PassConfig::default(), DEFAULT_REPETITIONS)?;
    print!("{}", render_overhead(&report));
    println!(
        "bytecode identical with mapping off: {}",
        report.all_bytecode_identical()
    );
    Ok(())
}
