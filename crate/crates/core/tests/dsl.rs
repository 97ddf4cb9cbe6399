mod common;

use std::f64::consts::{FRAC_PI_2, PI};

use proptest::prelude::*;
use rand::Rng;

use interfero::dsl::{
    builtin, elaborate, parse_circuit, DslError, ElaborationConfig, ElementKind, SplitterSpec,
};
use interfero::mode_algebra::modes;
use interfero::{mzi_closed_coeffs, mzi_open_transfer, BeamSplitterSpec, Mode, PhasePair};

#[test]
fn bare_splitter_golden_ast() {
    let d = parse_circuit(builtin::BARE_BS).unwrap();
    assert_eq!(d.modes(), modes(&["b", "v"]).as_slice());
    assert_eq!(d.source_mode(), &Mode::from("b"));
    assert!(d.params().is_empty());
    let kinds: Vec<&ElementKind> = d.elements().iter().map(|e| &e.kind).collect();
    assert_eq!(
        kinds,
        [&ElementKind::BeamSplitter {
            name: "BS".into(),
            spec: SplitterSpec::Balanced,
            inputs: [Mode::from("b"), Mode::from("v")],
            outputs: [Mode::from("s"), Mode::from("f")],
            removable: false,
        }]
    );
    assert_eq!(d.detector_mode("D1"), Some(&Mode::from("s")));
    assert_eq!(d.detector_mode("D2"), Some(&Mode::from("f")));
    assert_eq!(d.outputs(), modes(&["s", "f"]).as_slice());
}

#[test]
fn shipped_circuits_structure() {
    let closed = parse_circuit(builtin::MZI_CLOSED).unwrap();
    assert_eq!(closed.removable_elements(), ["BS_out"]);
    assert_eq!(closed.outputs(), modes(&["c1", "c2"]).as_slice());
    let names: Vec<&str> = closed.params().iter().map(|p| p.name.as_str()).collect();
    assert_eq!(names, ["reflectance", "phi_t", "phi_e", "phi_f"]);
    let open = parse_circuit(builtin::MZI_OPEN).unwrap();
    assert_eq!(open.removable_elements(), ["BS_out"]);
    assert_eq!(open.outputs(), modes(&["o1", "o2"]).as_slice());
}

#[test]
fn shipped_circuits_equal_closed_forms() {
    let closed = parse_circuit(builtin::MZI_CLOSED).unwrap();
    let open = parse_circuit(builtin::MZI_OPEN).unwrap();
    let mut rng = common::rng(16);
    for _ in 0..16 {
        let refl: f64 = rng.random();
        let phi_t = rng.random_range(-PI..PI);
        let phi_e = rng.random_range(-PI..PI);
        let phi_f = rng.random_range(-PI..PI);
        let spec = BeamSplitterSpec::from_reflectance(refl, phi_t).unwrap();

        let cfg = ElaborationConfig::all_removable(&closed, true)
            .with_param("reflectance", refl)
            .with_param("phi_t", phi_t)
            .with_param("phi_e", phi_e)
            .with_param("phi_f", phi_f);
        let m = elaborate(&closed, &cfg).unwrap();
        let want = mzi_closed_coeffs(&spec, &PhasePair::new(phi_e, phi_f)).transfer();
        assert_eq!(m.output_modes(), want.output_modes());
        assert!(m.max_abs_diff(&want) < 1e-12);

        let cfg = ElaborationConfig::all_removable(&open, false)
            .with_param("reflectance", refl)
            .with_param("phi_t", phi_t);
        let m = elaborate(&open, &cfg).unwrap();
        let want = mzi_open_transfer(&spec);
        assert_eq!(m.output_modes(), want.output_modes());
        assert!(m.max_abs_diff(&want) < 1e-12);
    }
}

#[test]
fn errors_carry_location_and_name() {
    let err = parse_circuit("modes b v;\nbs X balanced b w -> c d;\ndetect D1 c;\ndetect D2 d;").unwrap_err();
    match &err {
        DslError::Semantic { line, subject, .. } => {
            assert_eq!(*line, 2);
            assert_eq!(subject, "w");
        }
        other => panic!("{other:?}"),
    }
    assert!(err.to_string().contains('w'));

    let err = parse_circuit("modes b;\nphase b 1 +;\ndetect D b;").unwrap_err();
    assert!(matches!(err, DslError::Syntax { line: 2, .. }), "{err:?}");
}

#[test]
fn explicit_phase_convention() {
    // phi_r given as phi_t - pi/2 is also lossless
    let d = parse_circuit(&format!(
        "modes b v; bs A split(reflectance = 0.25, phi_t = 0.3, phi_r = 0.3 - {FRAC_PI_2}) b v -> e f; detect X e; detect Y f;"
    ))
    .unwrap();
    let m = elaborate(&d, &ElaborationConfig::new()).unwrap();
    assert!((m.entry(0, 0).norm_sqr() - 0.25).abs() < 1e-15);
    assert!(m.unitarity_residual() < 1e-12);
}

proptest! {
    #[test]
    fn printing_round_trips(seed in any::<u64>()) {
        let c = common::random_circuit(&mut common::rng(seed), 4, 5);
        let d = c.parse();
        let printed = d.to_string();
        let again = parse_circuit(&printed).unwrap();
        prop_assert_eq!(&again, &d);
        prop_assert_eq!(again.to_string(), printed);
    }

    #[test]
    fn random_circuits_elaborate_to_unitaries(seed in any::<u64>()) {
        let c = common::random_circuit(&mut common::rng(seed), 4, 5);
        let d = c.parse();
        let m = elaborate(&d, &c.config()).unwrap();
        prop_assert!(m.unitarity_residual() < 1e-12);
        prop_assert_eq!(m.input_modes(), d.modes());
        prop_assert_eq!(m.output_modes(), d.outputs());
    }
}
