use std::f64::consts::TAU;

use interfero::dsl::{builtin, parse_circuit};
use interfero::experiment::{
    run_sweep, run_trial, BuiltinMzi, CircuitModel, ConfigPolicy, Configuration, Detector,
    PhaseModel, SweepPlan, TimelineParams, TrialContext,
};
use interfero::BeamSplitterSpec;

fn plan(policy: ConfigPolicy, steps: u32, trials: u64, seed: u64) -> SweepPlan {
    SweepPlan {
        phase_start: 0.0,
        phase_stop: TAU,
        steps,
        trials_per_point: trials,
        policy,
        master_seed: seed,
    }
}

fn d1_fraction(records: &[interfero::experiment::TrialRecord], config: Configuration, index: u32) -> (f64, f64) {
    let sel: Vec<_> = records
        .iter()
        .filter(|r| r.config == config && r.phase_index == index)
        .collect();
    let n = sel.len() as f64;
    let d1 = sel.iter().filter(|r| r.detector == Detector::D1).count() as f64;
    (d1 / n, n)
}

#[test]
fn closed_frequencies_follow_the_fringe() {
    let spec = BeamSplitterSpec::from_reflectance(0.36, 0.0).unwrap();
    let model = BuiltinMzi { spec };
    let p = plan(ConfigPolicy::FixedClosed, 9, 20_000, 42);
    let records: Vec<_> = run_sweep(&p, &model, &TimelineParams::default()).unwrap().collect();
    assert_eq!(records.len(), 9 * 20_000);
    for (i, &phi) in p.phases().iter().enumerate() {
        // |R|^4 + |T|^4 - 2|R|^2|T|^2 cos(phi), written out independently
        let want = 0.36 * 0.36 + 0.64 * 0.64 - 2.0 * 0.36 * 0.64 * phi.cos();
        let (f, n) = d1_fraction(&records, Configuration::Closed, i as u32);
        let sigma = (want * (1.0 - want) / n).sqrt();
        assert!((f - want).abs() <= 4.0 * sigma, "phase {phi}: {f} vs {want}");
    }
}

#[test]
fn open_frequencies_are_transmittance() {
    let spec = BeamSplitterSpec::from_reflectance(0.36, 0.0).unwrap();
    let p = plan(ConfigPolicy::FixedOpen, 5, 20_000, 42);
    let records: Vec<_> = run_sweep(&p, &BuiltinMzi { spec }, &TimelineParams::default())
        .unwrap()
        .collect();
    let sigma = (0.64f64 * 0.36 / 20_000.0).sqrt();
    for i in 0..5 {
        let (f, _) = d1_fraction(&records, Configuration::Open, i);
        assert!((f - 0.64).abs() <= 4.0 * sigma, "point {i}: {f}");
    }
}

#[test]
fn random_policy_is_fair() {
    let p = plan(ConfigPolicy::Random, 4, 25_000, 3);
    let model = BuiltinMzi { spec: BeamSplitterSpec::balanced() };
    let n = p.total_trials() as f64;
    let closed = run_sweep(&p, &model, &TimelineParams::default())
        .unwrap()
        .filter(|r| r.config == Configuration::Closed)
        .count() as f64;
    assert!((closed / n - 0.5).abs() <= 4.0 * (0.25 / n).sqrt());
}

#[test]
fn stream_is_independent_of_thread_count() {
    let p = plan(ConfigPolicy::Random, 5, 2_000, 99);
    let model = BuiltinMzi { spec: BeamSplitterSpec::balanced() };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                run_sweep(&p, &model, &TimelineParams::default())
                    .unwrap()
                    .collect::<Vec<_>>()
            })
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert!(one.windows(2).all(|w| w[0].trial_id + 1 == w[1].trial_id));
}

#[test]
fn any_trial_regenerates_alone() {
    let p = plan(ConfigPolicy::Random, 3, 500, 12345);
    let model = BuiltinMzi { spec: BeamSplitterSpec::balanced() };
    let timeline = TimelineParams::default();
    let sweep = run_sweep(&p, &model, &timeline).unwrap();
    let pairs = sweep.pairs().to_vec();
    let timing = *sweep.timing();
    let phases = p.phases();
    for r in sweep.filter(|r| r.trial_id % 97 == 0) {
        let i = r.phase_index as usize;
        let ctx = TrialContext {
            pair: &pairs[i],
            phase_index: r.phase_index,
            phase: phases[i],
            policy: p.policy,
            timing: &timing,
        };
        assert_eq!(run_trial(&ctx, r.trial_id, p.master_seed), r);
    }
}

#[test]
fn shipped_circuit_matches_builtin_model() {
    let desc = parse_circuit(builtin::MZI_CLOSED).unwrap();
    let circuit = CircuitModel::new(desc, &[("reflectance".into(), 0.2)], "phi_e").unwrap();
    let spec = BeamSplitterSpec::from_reflectance(0.2, 0.0).unwrap();
    let builtin_model = BuiltinMzi { spec };
    for k in 0..32 {
        let phi = TAU * k as f64 / 31.0;
        let a = circuit.configurations(phi).unwrap();
        let b = builtin_model.configurations(phi).unwrap();
        for c in [Configuration::Closed, Configuration::Open] {
            assert!((a.d1_probability(c) - b.d1_probability(c)).abs() < 1e-12);
        }
    }
}

#[test]
fn circuit_model_rejects_unsuitable_circuits() {
    let bare = parse_circuit(builtin::BARE_BS).unwrap();
    assert!(CircuitModel::new(bare, &[], "phi_e").is_err());
    let closed = parse_circuit(builtin::MZI_CLOSED).unwrap();
    assert!(CircuitModel::new(closed.clone(), &[], "nope").is_err());
    assert!(CircuitModel::new(closed, &[("phi_e".into(), 1.0)], "phi_e").is_err());
}

#[test]
fn invalid_plans() {
    let model = BuiltinMzi { spec: BeamSplitterSpec::balanced() };
    let t = TimelineParams::default();
    let err = run_sweep(&plan(ConfigPolicy::Random, 3, 0, 1), &model, &t).err().unwrap();
    assert!(err.to_string().contains("trials ≥ 1"));
    assert!(run_sweep(&plan(ConfigPolicy::Random, 0, 10, 1), &model, &t).is_err());
}
