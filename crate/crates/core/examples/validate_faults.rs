//! Validates a clean source map, then injects each fault kind and shows what the validators report.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use zkmap::corpus::{bundled_dir, load_fixture};
use zkmap::mapgen::{inject_fault, validate_structural, validate_syntactic, FaultKind};
use zkmap::optimizer::PassConfig;
use zkmap::pipeline::compile;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fx = load_fixture(&bundled_dir().join("bank.msol"))?;
    let c = compile(&fx.source, &fx.file_name(), &PassConfig::default())?;
    let clean = c.validate();
    println!(
        "clean map: {} entries checked, {} violations",
        clean.checked,
        clean.violations.len()
    );

    let table = c.table.as_ref().expect("mapping is on");
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for kind in FaultKind::ALL {
        let Some(bad) = inject_fault(table, kind, &c.registry.spans, c.module.next_id, &mut rng)
        else {
            continue;
        };
        let r = validate_syntactic(&bad).merge(validate_structural(
            &bad,
            &c.registry,
            &c.module,
            &c.program,
        ));
        println!("{kind}: {} violations", r.violations.len());
        for v in r.violations.iter().take(2) {
            println!("    {v}");
        }
    }
    Ok(())
}
