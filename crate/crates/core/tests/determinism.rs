use zkmap::artifact::Artifact;
use zkmap::bench::config_matrix;
use zkmap::corpus::load_bundled;
use zkmap::pipeline::compile;

#[test]
fn artifacts_are_byte_identical_across_runs() {
    for fx in load_bundled().unwrap() {
        for (label, config) in config_matrix() {
            let a = Artifact::from_compilation(
                &compile(&fx.source, &fx.file_name(), &config).unwrap(),
                false,
            );
            let b = Artifact::from_compilation(
                &compile(&fx.source, &fx.file_name(), &config).unwrap(),
                false,
            );
            assert_eq!(a.to_json(), b.to_json(), "{}[{label}]", fx.name);
        }
    }
}

#[test]
fn timing_is_the_only_difference() {
    let fx = &load_bundled().unwrap()[0];
    let c = compile(&fx.source, &fx.file_name(), &Default::default()).unwrap();
    let timed = Artifact::from_compilation(&c, true);
    assert!(timed.timings.is_some());
    assert_eq!(
        timed.without_timing(),
        Artifact::from_compilation(&c, false)
    );
}

#[test]
fn artifacts_round_trip_and_validate() {
    for fx in load_bundled().unwrap() {
        let c = compile(&fx.source, &fx.file_name(), &Default::default()).unwrap();
        let a = Artifact::from_compilation(&c, false);
        let back = Artifact::from_json(&a.to_json()).unwrap();
        assert_eq!(back, a);
        assert_eq!(back.program().unwrap(), c.program);
        assert!(back.validate().unwrap().is_clean(), "{}", fx.name);
    }
}
