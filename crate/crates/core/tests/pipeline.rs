use dynet::bench::{run_benchmark, BenchConfig};
use dynet::io::{
    model_from_json, model_to_json, network_from_json, network_to_json, read_experiment_file, write_experiment_file,
};
use dynet::metrics::compare;
use dynet::netgen::{generate_case, GenConfig};
use dynet::network::BooleanNetwork;
use dynet::reconstruct::{reconstruct, ReconstructionConfig};
use dynet::solver::l1::L1Config;
use dynet::solver::sbl::SblConfig;
use dynet::solver::Method;

fn small_bench(jobs: usize) -> BenchConfig {
    let mut cfg = BenchConfig {
        trials: 3,
        seed: 5,
        jobs,
        methods: vec![Method::Girl1, Method::Gsbl],
        ..Default::default()
    };
    cfg.generator.nodes = 5;
    cfg.generator.samples = 200;
    cfg
}

#[test]
fn benchmark_is_independent_of_thread_count() {
    let a = run_benchmark(&small_bench(1)).unwrap();
    let b = run_benchmark(&small_bench(2)).unwrap();
    let strip = |r: &dynet::bench::BenchmarkReport| {
        r.records.iter().map(|t| (t.trial, t.seed, t.method, t.metrics.clone())).collect::<Vec<_>>()
    };
    assert_eq!(strip(&a), strip(&b));
    assert!(a.complete);
}

#[test]
fn summary_agrees_with_records() {
    let rep = run_benchmark(&small_bench(1)).unwrap();
    for s in &rep.summary {
        let rs: Vec<_> = rep.records.iter().filter(|r| r.method == s.method).collect();
        let mean = rs.iter().map(|r| r.metrics.precision).sum::<f64>() / rs.len() as f64;
        assert_eq!(s.trials, rs.len());
        assert!((s.precision_mean - mean).abs() < 1e-12);
    }
    let mut buf = Vec::new();
    rep.write_trials_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), rep.records.len() + 1);
}

#[test]
fn noise_free_reconstruction_all_methods() {
    let cfg = GenConfig {
        nodes: 5,
        snr_db: None,
        samples: 300,
        seed: 3,
        ..Default::default()
    };
    let case = generate_case(&cfg).unwrap();
    for method in Method::ALL {
        let rc = ReconstructionConfig {
            method,
            l1: L1Config {
                lambda: 5e-4,
                admm_max_iter: 100_000,
                ..Default::default()
            },
            sbl: SblConfig {
                prune_gamma: 1e-8,
                ..Default::default()
            },
            ..Default::default()
        };
        let data: Vec<_> = case.data.iter().map(|d| d.truncated(100)).collect();
        let data = if method == Method::Gsmc { data } else { case.data.clone() };
        let rec = reconstruct(&data, &rc).unwrap();
        let m = compare(&case.truth, &rec.network).unwrap();
        assert_eq!((m.precision, m.tpr), (1.0, 1.0), "{method}");
        assert!(rec.per_experiment.iter().all(|e| e.yy == rec.network.yy));
    }
}

#[test]
fn files_round_trip() {
    let cfg = GenConfig {
        nodes: 6,
        samples: 50,
        seed: 9,
        ..Default::default()
    };
    let case = generate_case(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.csv");
    write_experiment_file(&path, &case.data[0]).unwrap();
    let back = read_experiment_file(&path).unwrap();
    assert!((back.y - &case.data[0].y).amax() < 1e-12);
    assert_eq!(model_from_json(&model_to_json(&case.nominal)).unwrap(), case.nominal);
    assert_eq!(network_from_json(&network_to_json(&case.truth)).unwrap(), case.truth);
}

#[test]
fn metrics_examples() {
    let mut truth = BooleanNetwork::new(4, 0);
    for (f, t) in [(0, 1), (1, 2), (2, 3), (3, 0)] {
        truth.add_yy(f, t).unwrap();
    }
    let same = compare(&truth, &truth).unwrap();
    assert_eq!((same.precision, same.tpr, same.fp), (1.0, 1.0, 0));

    let mut est = BooleanNetwork::new(4, 0);
    for (f, t) in [(0, 1), (1, 2), (0, 2)] {
        est.add_yy(f, t).unwrap();
    }
    let m = compare(&truth, &est).unwrap();
    assert_eq!((m.tp, m.fp, m.fn_, m.tn), (2, 1, 2, 7));
    assert!((m.precision - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(m.tpr, 0.5);

    let empty = compare(&truth, &BooleanNetwork::new(4, 0)).unwrap();
    assert!(empty.precision_degenerate);
    assert_eq!((empty.precision, empty.tpr), (0.0, 0.0));
    assert!(compare(&truth, &BooleanNetwork::new(5, 0)).is_err());
}
