use dynet::lti::{unit_circle_points, Domain, Polynomial, RationalTransferFunction};
use dynet::network::{
    dsf_from_state_space, dsf_from_state_space_with_basis, null_space_basis, ArxNetworkModel,
    StateSpaceModel, StructureSource, DEFAULT_STRUCTURE_TOL,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_stable_ss(rng: &mut ChaCha8Rng, n: usize, p: usize, m: usize) -> StateSpaceModel {
    let mut a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let rho = a
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    a *= 0.9 / rho.max(1e-3);
    let b = DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0));
    let c = DMatrix::from_fn(p, n, |_, _| rng.random_range(-1.0..1.0));
    let d = DMatrix::from_fn(p, m, |_, _| rng.random_range(-1.0..1.0));
    let mut ss = StateSpaceModel::deterministic(a, b, c, d, Domain::Discrete);
    ss.k = DMatrix::from_fn(n, p, |_, _| rng.random_range(-1.0..1.0));
    ss
}

fn random_orthogonal(rng: &mut ChaCha8Rng, r: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(r, r, |_, _| rng.random_range(-1.0..1.0));
    g.qr().q()
}

#[test]
fn state_space_round_trip_random() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..20 {
        let p = rng.random_range(1..=3);
        let n = rng.random_range(p..=8);
        let m = rng.random_range(1..=2);
        let ss = random_stable_ss(&mut rng, n, p, m);
        let dsf = dsf_from_state_space(&ss).unwrap();
        for i in 0..p {
            assert!(dsf.q.get(i, i).is_zero());
        }
        for z in unit_circle_points(16) {
            let lhs = dsf.io_response(z).unwrap();
            let rhs = ss.io_response(z).unwrap();
            let err = (lhs - rhs).iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(err < 1e-8, "trial {trial} n={n} p={p}: {err:e}");
        }
    }
}

#[test]
fn state_space_dsf_basis_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..10 {
        let p = rng.random_range(1..=3);
        let n = rng.random_range(p + 1..=8);
        let ss = random_stable_ss(&mut rng, n, p, 2);
        let e1 = null_space_basis(&ss.c).unwrap();
        let e2 = &e1 * random_orthogonal(&mut rng, n - p);
        let d1 = dsf_from_state_space_with_basis(&ss, &e1).unwrap();
        let d2 = dsf_from_state_space_with_basis(&ss, &e2).unwrap();
        for z in unit_circle_points(16) {
            for (a, b) in [(&d1.q, &d2.q), (&d1.p, &d2.p), (&d1.h, &d2.h)] {
                let diff = (a.eval(z).unwrap() - b.eval(z).unwrap())
                    .iter()
                    .map(|v| v.norm())
                    .fold(0.0, f64::max);
                assert!(diff < 1e-8, "{diff:e}");
            }
        }
    }
}

#[test]
fn identity_output_diagonal_a_gives_zero_q() {
    let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.2, -0.4, 0.7]));
    let b = DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 0.0]);
    let ss = StateSpaceModel::deterministic(
        a,
        b,
        DMatrix::identity(3, 3),
        DMatrix::zeros(3, 1),
        Domain::Discrete,
    );
    let dsf = dsf_from_state_space(&ss).unwrap();
    assert!(dsf.q.iter().all(|(_, _, g)| g.is_zero()));
    let p1 = dsf.p.get(1, 0);
    let z = Complex64::new(0.3, 0.8);
    let expect = 2.0 / (z + 0.4);
    assert!((p1.eval(z).unwrap() - expect).norm() < 1e-12);
    assert!(dsf.p.get(2, 0).is_zero());
}

#[test]
fn continuous_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..5 {
        let mut ss = random_stable_ss(&mut rng, 5, 2, 1);
        ss.a -= DMatrix::identity(5, 5) * 2.0;
        ss.domain = Domain::Continuous;
        let dsf = dsf_from_state_space(&ss).unwrap();
        for w in [0.1, 1.0, 10.0] {
            let z = Complex64::new(0.0, w);
            let err = (dsf.io_response(z).unwrap() - ss.io_response(z).unwrap())
                .iter()
                .map(|v| v.norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-8);
        }
        assert!(dsf.is_stable());
    }
}

#[test]
fn arx_dsf_frequency_response_matches_ratio() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut m = ArxNetworkModel::empty(3, 1);
    let mut poly = |lead: f64| {
        let mut c = vec![lead];
        c.extend((0..2).map(|_| rng.random_range(-0.4..0.4)));
        Polynomial::discrete(c)
    };
    for i in 0..3 {
        m.a[i] = poly(1.0);
        m.bu[i][0] = poly(0.0);
        for j in 0..3 {
            if i != j {
                m.by[i][j] = poly(0.0);
            }
        }
    }
    let dsf = m.to_dsf().unwrap();
    for z in unit_circle_points(16) {
        for i in 0..3 {
            for j in 0..3 {
                if i == j {
                    continue;
                }
                let zi = z.inv();
                let expect = m.by[i][j].eval_stored(zi) / m.a[i].eval_stored(zi);
                assert!((dsf.q.get(i, j).eval(z).unwrap() - expect).norm() < 1e-12);
            }
        }
    }
}

fn arb_poly(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, 2..=max_len).prop_filter("leading", |c| {
        c.last().is_some_and(|v| v.abs() > 0.05)
    })
}

fn stable_tf(roots: Vec<(f64, f64)>, gain: f64) -> RationalTransferFunction {
    let r: Vec<Complex64> = roots
        .iter()
        .map(|(m, a)| Complex64::from_polar(*m, *a))
        .flat_map(|z| [z, z.conj()])
        .collect();
    let fwd = Polynomial::from_roots(&r, Domain::Continuous);
    let den = Polynomial::discrete(fwd.coeffs().iter().rev().copied().collect());
    let mut num = vec![0.0; den.len()];
    num[1] = gain;
    RationalTransferFunction::new(Polynomial::discrete(num), den).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn roots_have_small_residual(c in arb_poly(7)) {
        let p = Polynomial::continuous(c);
        let scale = p.max_abs_coeff();
        for r in p.roots().unwrap() {
            prop_assert!(p.eval_stored(r).norm() / scale < 1e-8);
        }
    }

    #[test]
    fn product_response_is_pointwise_product(
        a in arb_poly(4), b in arb_poly(4), c in arb_poly(4), d in arb_poly(4)
    ) {
        let mk = |n: Vec<f64>, d: Vec<f64>| RationalTransferFunction::new(
            Polynomial::discrete(n), Polynomial::discrete(d)).unwrap();
        let g1 = mk(a, b);
        let g2 = mk(c, d);
        let g = &g1 * &g2;
        for z in unit_circle_points(8) {
            if let (Ok(x), Ok(y), Ok(xy)) = (g1.eval(z), g2.eval(z), g.eval(z)) {
                prop_assert!((x * y - xy).norm() <= 1e-12 * (1.0 + xy.norm()));
            }
        }
    }

    #[test]
    fn hinf_is_submultiplicative(
        r1 in prop::collection::vec((0.0..0.85f64, 0.0..3.1f64), 1..3),
        r2 in prop::collection::vec((0.0..0.85f64, 0.0..3.1f64), 1..3),
        k1 in 0.1..2.0f64, k2 in 0.1..2.0f64,
    ) {
        let g1 = stable_tf(r1, k1);
        let g2 = stable_tf(r2, k2);
        let n12 = (&g1 * &g2).hinf_norm(1024).unwrap();
        let bound = g1.hinf_norm(1024).unwrap() * g2.hinf_norm(1024).unwrap();
        prop_assert!(n12 <= bound * (1.0 + 1e-6));
    }

    #[test]
    fn arx_structure_preserved_by_dsf(mask in prop::collection::vec(any::<bool>(), 16)) {
        let mut m = ArxNetworkModel::empty(4, 0);
        for i in 0..4 {
            for j in 0..4 {
                if i != j && mask[i * 4 + j] {
                    m.by[i][j] = Polynomial::discrete(vec![0.0, 0.3, -0.1]);
                }
            }
        }
        prop_assert_eq!(
            m.to_dsf().unwrap().boolean_structure(DEFAULT_STRUCTURE_TOL),
            m.boolean_structure(DEFAULT_STRUCTURE_TOL)
        );
    }
}
