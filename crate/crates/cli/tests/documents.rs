use ctbn_cli::examples::{packaged_model, NAMES};
use ctbn_cli::{parse_model, serialize_model, simulate_evidence, PathsFile, ResultFile};
use ctbn_core::gibbs::{run, GibbsConfig};
use proptest::prelude::*;

#[test]
fn packaged_models_load_and_round_trip() {
    for name in NAMES {
        let file = packaged_model(name).unwrap().unwrap();
        let spec = file.to_spec().unwrap();
        let text = serialize_model(&spec).unwrap();
        assert_eq!(parse_model(&text).unwrap(), spec, "{name}");
        assert!(file.simulation.is_some(), "{name}");
    }
    let spec = packaged_model("example2").unwrap().unwrap().to_spec().unwrap();
    assert_eq!(spec.cim(1, 0).rate(0, 1), 100.0);
    assert_eq!(spec.cim(1, 1).rate(1, 0), 2.0);
    let lv = packaged_model("lotka_volterra").unwrap().unwrap().to_spec().unwrap();
    assert_eq!(lv.alphabet_size(0), 201);
    assert_eq!(lv.alphabet_size(1), 31);
}

#[test]
fn example2_child_jump_rate() {
    // Y jumps at rate 100 while X = 1 and 2 while X = 2; X starts uniform.
    let spec = packaged_model("example2").unwrap().unwrap().to_spec().unwrap();
    let time_in_1 = 5.0 / 9.0 - (1.0 - (-9.0_f64).exp()) / (18.0 * 9.0);
    let want = 100.0 * time_in_1 + 2.0 * (1.0 - time_in_1);
    let n = 4000;
    let counts: Vec<f64> = (0..n)
        .map(|s| simulate_evidence(&spec, &[1], 0.0, 1.0, s).unwrap().trajectory.path(1).jump_count() as f64)
        .collect();
    let mean = counts.iter().sum::<f64>() / n as f64;
    let sd = (counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    assert!((mean - want).abs() < 4.0 * sd / (n as f64).sqrt(), "{mean} vs {want}");
}

#[test]
fn simulated_documents_split_evidence_and_truth() {
    let spec = packaged_model("example1").unwrap().unwrap().to_spec().unwrap();
    let sim = simulate_evidence(&spec, &[1], 0.0, 1.0, 9).unwrap();
    assert_eq!(sim, simulate_evidence(&spec, &[1], 0.0, 1.0, 9).unwrap());
    let evidence = PathsFile::from_json(&sim.evidence_file(&spec).to_json()).unwrap();
    assert_eq!(evidence.to_evidence(&spec).unwrap(), sim.evidence);
    let truth = PathsFile::from_json(&sim.truth_file(&spec).to_json()).unwrap();
    let decoded = truth.decode(&spec).unwrap();
    assert_eq!(decoded.len(), 1);
    assert_eq!(decoded[0].0, 0);
    assert_eq!(&decoded[0].1, sim.trajectory.path(0));
}

#[test]
fn result_documents_round_trip() {
    let spec = packaged_model("example1").unwrap().unwrap().to_spec().unwrap();
    let sim = simulate_evidence(&spec, &[1], 0.0, 1.0, 2).unwrap();
    let est = run(&spec, &sim.evidence, &GibbsConfig { grid_points: 6, ..GibbsConfig::new(50, 1) }).unwrap();
    let metadata = ctbn_cli::result::RunMetadata {
        algorithm: "mcmc".into(),
        model: "example1".into(),
        seed: 1,
        iterations: 50,
        burn_in: 5,
        lambda_mult: 2.5,
        chains: 1,
        grid: 6,
        acceptance: Some(ctbn_cli::result::AcceptanceSummary::from_stats(&est.diagnostics.moves)),
        ess: None,
        wall_seconds: 0.125,
    };
    let result = ResultFile::new(&spec, &est, metadata);
    assert_eq!(result.posterior.len(), 6 * 2);
    assert_eq!(ResultFile::from_json(&result.to_json()).unwrap(), result);
    let csv = result.to_csv();
    assert_eq!(csv.lines().count(), 13);
    assert!(csv.starts_with("node,t,state,posterior_probability\n"));
}

proptest! {
    #[test]
    fn evidence_documents_round_trip_bit_exactly(
        raw in prop::collection::btree_set(1u64..(1 << 52), 0..20),
        flips in prop::collection::vec(any::<bool>(), 20),
        start in 0usize..2,
    ) {
        let spec = packaged_model("example1").unwrap().unwrap().to_spec().unwrap();
        let times: Vec<f64> = raw.iter().map(|&k| k as f64 / (1u64 << 52) as f64).collect();
        let mut state = start;
        let states: Vec<usize> = times.iter().zip(&flips).map(|_| { state = 1 - state; state }).collect();
        let path = ctbn_core::markov::SamplePath::new(0.0, 1.0, start, times, states).unwrap();
        let traj = ctbn_core::ctbn::CtbnTrajectory::new(vec![
            ctbn_core::markov::SamplePath::constant(0.0, 1.0, 0),
            path.clone(),
        ]).unwrap();
        let doc = PathsFile::from_trajectory(&spec, &traj, &[1]);
        let back = PathsFile::from_json(&doc.to_json()).unwrap();
        prop_assert_eq!(&back, &doc);
        prop_assert_eq!(&back.decode(&spec).unwrap()[0].1, &path);
    }
}
