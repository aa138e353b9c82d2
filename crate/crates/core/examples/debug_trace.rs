//! The debugging scenario: a second vote from the same sender reverts, and the source trace
//! shows which require fired.

use zkmap::artifact::Artifact;
use zkmap::corpus::{bundled_dir, load_fixture};
use zkmap::debugger::{render_trace, trace_transactions};
use zkmap::optimizer::PassConfig;
use zkmap::pipeline::compile;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fx = load_fixture(&bundled_dir().join("zkvoting.msol"))?;
    let c = compile(&fx.source, &fx.file_name(), &PassConfig::default())?;
    let artifact = Artifact::from_compilation(&c, false);
    for t in trace_transactions(&artifact, &fx.suite, None)? {
        print!("{}", render_trace(&t));
    }
    Ok(())
}
