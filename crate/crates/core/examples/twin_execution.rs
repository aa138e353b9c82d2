//! Runs one transaction through the reference interpreter and the VM and scores the lifted trace.

use zkmap::corpus::{bundled_dir, load_fixture};
use zkmap::exec::twin_execute;
use zkmap::optimizer::PassConfig;
use zkmap::pipeline::compile;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fx = load_fixture(&bundled_dir().join("fibonacci.msol"))?;
    let c = compile(&fx.source, &fx.file_name(), &PassConfig::default())?;
    let table = c.table.as_ref().expect("mapping is on");
    let storage = fx
        .suite
        .initial(&c.program.storage, &c.program.initial_storage)?;
    let tx = fx.suite.transactions[0].input();
    let run = twin_execute(&c.unit, &c.registry, &c.program, table, &storage, &tx)?;
    println!("interpreter: {}", run.reference.status);
    println!("vm:          {}", run.vm.status);
    println!("engines agree: {}", run.agrees());
    println!(
        "{} of {} mapped instruction events matched ({:.2}%)",
        run.accuracy.matched_instructions,
        run.accuracy.mapped_instructions,
        run.accuracy.ratio() * 100.0
    );
    Ok(())
}
