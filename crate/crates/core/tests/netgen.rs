mod common;

use common::rng;
use dynet::netgen::{
    arc_count, bounded_simulation_peak, feedback_arcs, generate_case, generate_network, make_replica,
    random_boolean_structure, random_ct_system, run_arx, simulate_arx, simulate_ct, white_input, GenConfig, StepInput,
};
use dynet::network::{StructureSource, DEFAULT_STRUCTURE_TOL};
use nalgebra::{DMatrix, DVector};

fn column_variance(m: &DMatrix<f64>, i: usize) -> f64 {
    m.column(i).variance()
}

#[test]
fn snr_matches_request_on_long_records() {
    let cfg = GenConfig::default();
    let (_, model, _) = generate_network(&cfg, &mut rng(1)).unwrap();
    let u = white_input(5000, model.inputs(), 2);
    let sim = simulate_arx(&model, &u, Some(10.0), 3).unwrap();
    let clean = run_arx(&model, &u, None).unwrap();
    let noise = &sim.data.y - &clean;
    for i in 0..model.outputs() {
        let snr = 10.0 * (column_variance(&clean, i) / column_variance(&noise, i)).log10();
        assert!((snr - 10.0).abs() <= 0.5, "output {i}: {snr} dB");
    }
}

#[test]
fn noise_free_simulation_is_clean_response() {
    let (_, model, _) = generate_network(&GenConfig::default(), &mut rng(4)).unwrap();
    let u = white_input(300, model.inputs(), 5);
    let sim = simulate_arx(&model, &u, None, 6).unwrap();
    assert_eq!(sim.data.y, run_arx(&model, &u, None).unwrap());
    assert!(sim.noise_std.iter().all(|s| *s == 0.0));
}

#[test]
fn cases_are_deterministic() {
    let cfg = GenConfig {
        seed: 17,
        samples: 200,
        ..Default::default()
    };
    let a = generate_case(&cfg).unwrap();
    let b = generate_case(&cfg).unwrap();
    assert_eq!(a.truth, b.truth);
    assert_eq!(a.data, b.data);
    let c = generate_case(&GenConfig { seed: 18, ..cfg }).unwrap();
    assert_ne!(a.data, c.data);
}

#[test]
fn generated_networks_stay_bounded() {
    for seed in 0..10 {
        let (truth, model, _) = generate_network(&GenConfig::default(), &mut rng(seed)).unwrap();
        assert_eq!(truth.yy_count(), 20);
        assert!(model.is_stable());
        let peak = bounded_simulation_peak(&model, 2000, seed).unwrap();
        assert!(peak < 1e6, "seed {seed}: {peak}");
    }
}

#[test]
fn structure_respects_feedback_cap() {
    assert_eq!(arc_count(10, 0.2), 20);
    for seed in 0..20 {
        let net = random_boolean_structure(10, 0.2, 3, &mut rng(seed)).unwrap();
        assert_eq!(net.yy_count(), 20);
        assert!(net.yy.iter().all(|(f, t)| f != t));
        assert!(feedback_arcs(&net).len() <= 3);
    }
}

#[test]
fn replicas_share_structure_but_not_parameters() {
    let cfg = GenConfig::default();
    let mut r = rng(8);
    let (truth, model, _) = generate_network(&cfg, &mut r).unwrap();
    let reps = make_replica(&model, 0.1, 3, &mut r).unwrap();
    for rep in &reps {
        let s = rep.boolean_structure(DEFAULT_STRUCTURE_TOL);
        assert_eq!(s.yy, truth.yy);
        assert_eq!(s.uy, truth.uy);
        assert!(rep.is_stable());
        assert_ne!(rep, &model);
    }
}

#[test]
fn ct_step_response_settles_at_dc_gain() {
    let ss = random_ct_system(6, 4, 0.2, &mut rng(9)).unwrap();
    let step = StepInput { amplitude: 1.0, start: 0.0 };
    let data = simulate_ct(&ss, step, 0.0, 10.0, 60.0, 1).unwrap();
    let dc = -(&ss.c * ss.a.clone().lu().solve(&ss.b).unwrap());
    let last = data.y.row(data.samples() - 1);
    for i in 0..4 {
        assert!((last[i] - dc[(i, 0)]).abs() < 1e-6 * (1.0 + dc[(i, 0)].abs()), "{} vs {}", last[i], dc[(i, 0)]);
    }
}

#[test]
fn ct_noise_variance_matches_lyapunov() {
    let ss = random_ct_system(3, 3, 0.0, &mut rng(10)).unwrap();
    let n = 3;
    let sigma = 0.2;
    let eye = DMatrix::<f64>::identity(n, n);
    let kron = eye.kronecker(&ss.a) + ss.a.kronecker(&eye);
    let rhs = DVector::from_iterator(n * n, eye.iter().map(|v| -sigma * sigma * v));
    let p = kron.lu().solve(&rhs).unwrap();
    let step = StepInput { amplitude: 0.0, start: 0.0 };
    let data = simulate_ct(&ss, step, sigma, 5.0, 4000.0, 11).unwrap();
    let skip = data.samples() / 20;
    let y = data.y.rows(skip, data.samples() - skip).into_owned();
    for i in 0..n {
        let expect = p[i * n + i];
        let got = y.column(i).variance();
        assert!((got / expect - 1.0).abs() < 0.15, "state {i}: {got} vs {expect}");
    }
}
