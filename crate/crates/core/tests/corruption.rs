//! Corrupting a source map never improves measured accuracy.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zkmap::corpus::load_bundled;
use zkmap::exec::run_suite;
use zkmap::mapgen::{inject_fault, FaultKind};
use zkmap::optimizer::PassConfig;
use zkmap::pipeline::compile;

const TRIALS: u64 = 30;

#[test]
fn corruption_never_raises_accuracy() {
    let fixtures = load_bundled().unwrap();
    let mut lowered = 0;
    for seed in 0..TRIALS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fx = fixtures.choose(&mut rng).unwrap();
        let c = compile(&fx.source, &fx.file_name(), &PassConfig::none()).unwrap();
        let clean = run_suite(&c, &fx.suite).unwrap().accuracy;
        assert_eq!(
            clean.matched_instructions, clean.mapped_instructions,
            "{}",
            fx.name
        );

        let kind = [FaultKind::SpanSwap, FaultKind::ForeignSpan][rng.gen_range(0..2)];
        let mut bad = c.clone();
        let mut table = c.table.clone().unwrap();
        for _ in 0..rng.gen_range(1..=4) {
            table =
                inject_fault(&table, kind, &c.registry.spans, c.module.next_id, &mut rng).unwrap();
        }
        bad.table = Some(table);
        let Ok(run) = run_suite(&bad, &fx.suite) else {
            continue;
        };
        assert!(
            run.accuracy.ratio() <= clean.ratio(),
            "{} seed {seed}: {} > {}",
            fx.name,
            run.accuracy.ratio(),
            clean.ratio()
        );
        lowered += usize::from(run.accuracy.ratio() < clean.ratio());
    }
    assert!(lowered > 0, "no corruption was ever measurable");
}
