use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use zkmap::bench::config_matrix;
use zkmap::corpus::load_bundled;
use zkmap::mapgen::{inject_fault, validate_structural, validate_syntactic, FaultKind, Violation};
use zkmap::pipeline::compile;

#[test]
fn honest_maps_are_clean_in_every_config() {
    for fx in load_bundled().unwrap() {
        for (label, config) in config_matrix() {
            let c = compile(&fx.source, &fx.file_name(), &config).unwrap();
            let r = c.validate();
            assert!(r.is_clean(), "{}[{label}]: {:?}", fx.name, r.violations);
            assert_eq!(r.checked, c.table.as_ref().unwrap().len());
        }
    }
}

#[test]
fn every_fault_kind_is_caught_on_every_fixture() {
    for fx in load_bundled().unwrap() {
        let c = compile(&fx.source, &fx.file_name(), &Default::default()).unwrap();
        let table = c.table.as_ref().unwrap();
        for kind in FaultKind::ALL {
            for seed in 0..5 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let bad = inject_fault(table, kind, &c.registry.spans, c.module.next_id, &mut rng)
                    .unwrap();
                let r = validate_syntactic(&bad).merge(validate_structural(
                    &bad,
                    &c.registry,
                    &c.module,
                    &c.program,
                ));
                assert!(!r.is_clean(), "{} {kind} seed {seed}", fx.name);
            }
        }
    }
}

#[test]
fn fault_kinds_raise_their_own_violations() {
    let fx = load_bundled()
        .unwrap()
        .into_iter()
        .find(|f| f.name == "zkvoting")
        .unwrap();
    let c = compile(&fx.source, &fx.file_name(), &Default::default()).unwrap();
    let table = c.table.as_ref().unwrap();
    let check = |kind, pred: fn(&Violation) -> bool| {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let bad = inject_fault(table, kind, &c.registry.spans, c.module.next_id, &mut rng).unwrap();
        let r = validate_syntactic(&bad).merge(validate_structural(
            &bad,
            &c.registry,
            &c.module,
            &c.program,
        ));
        assert!(r.violations.iter().any(pred), "{kind}: {:?}", r.violations);
    };
    check(FaultKind::OffsetDuplication, |v| {
        matches!(v, Violation::DuplicateOffset { .. })
    });
    check(FaultKind::DanglingIrId, |v| {
        matches!(v, Violation::DanglingIrId { .. })
    });
    check(FaultKind::SpanSwap, |v| {
        matches!(v, Violation::SpanMismatch { .. })
    });
}
