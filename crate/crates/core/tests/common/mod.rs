//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::ops::Range;

use dynet::lti::Domain;
use dynet::network::StateSpaceModel;
use dynet::regression::GroupedRegressionProblem;
use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Problem with `groups` large groups of `rho` columns per experiment,
/// `rows` rows split evenly over `replicas` experiments (block diagonal
/// inside each group) and `active` nonzero groups.
pub fn random_problem(
    rng: &mut ChaCha8Rng,
    rows: usize,
    groups: usize,
    rho: usize,
    replicas: usize,
    active: usize,
    noise: f64,
) -> (GroupedRegressionProblem, DVector<f64>) {
    let per = rows / replicas;
    let row_blocks: Vec<Range<usize>> = (0..replicas).map(|l| l * per..(l + 1) * per).collect();
    let cols = groups * rho * replicas;
    let mut a = DMatrix::zeros(rows, cols);
    for k in 0..groups {
        for l in 0..replicas {
            let start = (k * replicas + l) * rho;
            for c in start..start + rho {
                for r in row_blocks[l].clone() {
                    a[(r, c)] = gauss(rng);
                }
            }
        }
    }
    let mut w = DVector::zeros(cols);
    for k in 0..active.min(groups) {
        for c in k * rho * replicas..(k + 1) * rho * replicas {
            w[c] = gauss(rng);
        }
    }
    let y = &a * &w + DVector::from_fn(rows, |_, _| noise * gauss(rng));
    let problem = GroupedRegressionProblem {
        a,
        y,
        rho: vec![rho; groups],
        replicas,
        output: 0,
        row_blocks,
    };
    (problem, w)
}

pub fn group_ranges(problem: &GroupedRegressionProblem) -> Vec<Range<usize>> {
    (0..problem.groups()).map(|k| problem.group_range(k)).collect()
}

/// `1/2 ||y - A w||^2 + sum_k tau_k ||w_k||`, evaluated directly.
pub fn objective(a: &DMatrix<f64>, y: &DVector<f64>, groups: &[Range<usize>], tau: &[f64], w: &DVector<f64>) -> f64 {
    let r = y - a * w;
    0.5 * r.norm_squared()
        + groups
            .iter()
            .zip(tau)
            .map(|(g, t)| t * w.rows_range(g.clone()).norm())
            .sum::<f64>()
}

fn solve_spd(h: DMatrix<f64>, g: &DVector<f64>) -> DVector<f64> {
    match Cholesky::new(h.clone()) {
        Some(c) => c.solve(g),
        None => h.lu().solve(g).expect("singular Newton system"),
    }
}

/// Second-order cone reformulation `min 1/2 ||y - A w||^2 + sum tau_k t_k`
/// s.t. `||w_k|| <= t_k`, solved by a log-barrier Newton method to a
/// duality gap below `gap`.
pub fn socp_group_lasso(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    groups: &[Range<usize>],
    tau: &[f64],
    gap: f64,
) -> DVector<f64> {
    let n = a.ncols();
    let g_count = groups.len();
    let dim = n + g_count;
    let ata = a.transpose() * a;
    let aty = a.transpose() * y;
    let mut x = DVector::zeros(dim);
    for k in 0..g_count {
        x[n + k] = 1.0;
    }
    let slack = |x: &DVector<f64>, k: usize| {
        let t = x[n + k];
        t * t - x.rows_range(groups[k].clone()).norm_squared()
    };
    let feasible = |x: &DVector<f64>| (0..g_count).all(|k| x[n + k] > 0.0 && slack(x, k) > 0.0);
    let barrier_obj = |x: &DVector<f64>, s: f64| {
        let w = x.rows(0, n).into_owned();
        let r = y - a * &w;
        let smooth = 0.5 * r.norm_squared() + (0..g_count).map(|k| tau[k] * x[n + k]).sum::<f64>();
        s * smooth - (0..g_count).map(|k| slack(x, k).ln()).sum::<f64>()
    };
    let mut s = 1.0;
    loop {
        for _ in 0..200 {
            let w = x.rows(0, n).into_owned();
            let mut grad = DVector::zeros(dim);
            let gw = (&ata * &w - &aty) * s;
            grad.rows_mut(0, n).copy_from(&gw);
            let mut h = DMatrix::zeros(dim, dim);
            h.view_mut((0, 0), (n, n)).copy_from(&(&ata * s));
            for (k, g) in groups.iter().enumerate() {
                let d = slack(&x, k);
                let t = x[n + k];
                let wk = x.rows_range(g.clone()).into_owned();
                for (i, ci) in g.clone().enumerate() {
                    grad[ci] += 2.0 * wk[i] / d;
                    for (j, cj) in g.clone().enumerate() {
                        h[(ci, cj)] += 4.0 * wk[i] * wk[j] / (d * d) + if i == j { 2.0 / d } else { 0.0 };
                    }
                    let v = -4.0 * t * wk[i] / (d * d);
                    h[(ci, n + k)] += v;
                    h[(n + k, ci)] += v;
                }
                grad[n + k] += s * tau[k] - 2.0 * t / d;
                h[(n + k, n + k)] += -2.0 / d + 4.0 * t * t / (d * d);
            }
            let dx = -solve_spd(h, &grad);
            let decrement = -grad.dot(&dx);
            if decrement / 2.0 < 1e-14 {
                break;
            }
            let f0 = barrier_obj(&x, s);
            let mut step = 1.0;
            loop {
                let cand = &x + &dx * step;
                if feasible(&cand) && barrier_obj(&cand, s) <= f0 - 0.25 * step * decrement {
                    x = cand;
                    break;
                }
                step *= 0.5;
                if step < 1e-20 {
                    break;
                }
            }
            if step < 1e-20 {
                break;
            }
        }
        if 2.0 * g_count as f64 / s < gap {
            break;
        }
        s *= 10.0;
    }
    x.rows(0, n).into_owned()
}

/// Minimizer of `1/2 ||x - v||^2 + tau ||x||` by damped Newton iterations on
/// the smooth branch, compared against `x = 0`.
pub fn numeric_prox(v: &DVector<f64>, tau: f64) -> DVector<f64> {
    let f = |x: &DVector<f64>| 0.5 * (x - v).norm_squared() + tau * x.norm();
    let n = v.len();
    let mut x = v.clone();
    for _ in 0..200 {
        let nx = x.norm();
        if nx < 1e-12 * v.norm() {
            break;
        }
        let grad = &x - v + &x * (tau / nx);
        if grad.norm() < 1e-15 * (1.0 + v.norm()) {
            break;
        }
        let h = DMatrix::identity(n, n) * (1.0 + tau / nx) - &x * x.transpose() * (tau / nx.powi(3));
        let Some(dx) = h.lu().solve(&grad).map(|d| -d) else {
            break;
        };
        let f0 = f(&x);
        let mut step = 1.0;
        while step > 1e-20 {
            let cand = &x + &dx * step;
            if cand.norm() > 0.0 && f(&cand) <= f0 {
                break;
            }
            step *= 0.5;
        }
        let cand = &x + &dx * step;
        if step <= 1e-20 || cand.norm() == 0.0 {
            break;
        }
        x = cand;
    }
    let zero = DVector::zeros(n);
    if f(&zero) <= f(&x) {
        zero
    } else {
        x
    }
}

/// Per-row noise variance from per-experiment `sigma2`.
fn row_noise(problem: &GroupedRegressionProblem, sigma2: &[f64]) -> DVector<f64> {
    let mut d = DVector::zeros(problem.a.nrows());
    for (l, r) in problem.row_blocks.iter().enumerate() {
        for i in r.clone() {
            d[i] = sigma2[l];
        }
    }
    d
}

/// `Sigma_y = Sigma + A Gamma A^T` with per-column prior variance `var`.
fn marginal_cov(problem: &GroupedRegressionProblem, var: &DVector<f64>, sigma2: &[f64]) -> DMatrix<f64> {
    let ag = DMatrix::from_fn(problem.a.nrows(), problem.a.ncols(), |r, c| problem.a[(r, c)] * var[c]);
    let mut s = ag * problem.a.transpose();
    let d = row_noise(problem, sigma2);
    for i in 0..d.len() {
        s[(i, i)] += d[i];
    }
    s
}

/// Column variances from per-group `gamma` (zero for inactive groups).
pub fn column_variances(problem: &GroupedRegressionProblem, gamma: &[f64]) -> DVector<f64> {
    let mut v = DVector::zeros(problem.columns());
    for k in 0..problem.groups() {
        for c in problem.group_range(k) {
            v[c] = gamma[k];
        }
    }
    v
}

/// `log N(y; 0, Sigma + A Gamma A^T)` from the dense N x N covariance.
pub fn dense_log_evidence(problem: &GroupedRegressionProblem, gamma: &[f64], sigma2: &[f64]) -> f64 {
    let var = column_variances(problem, gamma);
    let s = marginal_cov(problem, &var, sigma2);
    let n = s.nrows() as f64;
    let chol = Cholesky::new(s).expect("Sigma_y positive definite");
    let logdet = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let quad = problem.y.dot(&chol.solve(&problem.y));
    -0.5 * (n * (2.0 * std::f64::consts::PI).ln() + logdet + quad)
}

/// Posterior mean in the data-space form `Gamma A^T Sigma_y^-1 y`.
pub fn dense_posterior_mean(problem: &GroupedRegressionProblem, gamma: &[f64], sigma2: &[f64]) -> DVector<f64> {
    let var = column_variances(problem, gamma);
    let s = marginal_cov(problem, &var, sigma2);
    let z = Cholesky::new(s).expect("Sigma_y positive definite").solve(&problem.y);
    (problem.a.transpose() * z).component_mul(&var)
}

/// Exact posterior inclusion probabilities over all `2^M` indicator vectors
/// with a common `gamma`, fixed `sigma2` and prior inclusion `pi`.
pub fn enumerate_inclusion(problem: &GroupedRegressionProblem, gamma: f64, sigma2: &[f64], pi: f64) -> Vec<f64> {
    let m = problem.groups();
    let mut logw = Vec::with_capacity(1 << m);
    for mask in 0..(1usize << m) {
        let g: Vec<f64> = (0..m).map(|k| if mask >> k & 1 == 1 { gamma } else { 0.0 }).collect();
        let on = mask.count_ones() as f64;
        let prior = on * pi.ln() + (m as f64 - on) * (1.0 - pi).ln();
        logw.push(prior + dense_log_evidence(problem, &g, sigma2));
    }
    let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logw.iter().map(|v| (v - top).exp()).collect();
    let total: f64 = w.iter().sum();
    (0..m)
        .map(|k| {
            w.iter()
                .enumerate()
                .filter(|(mask, _)| mask >> k & 1 == 1)
                .map(|(_, v)| v)
                .sum::<f64>()
                / total
        })
        .collect()
}

/// Owner `(k, l)` of every column, laid out group by group and experiment by
/// experiment.
pub fn direct_layout(rho: &[usize], l_count: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (k, &r) in rho.iter().enumerate() {
        for l in 0..l_count {
            out.extend(std::iter::repeat_n((k, l), r));
        }
    }
    out
}

/// Contiguous span of the columns selected by `pred`.
pub fn span(layout: &[(usize, usize)], pred: impl Fn(&(usize, usize)) -> bool) -> Range<usize> {
    let idx: Vec<usize> = layout.iter().enumerate().filter(|(_, o)| pred(o)).map(|(i, _)| i).collect();
    let (first, last) = (idx[0], *idx.last().unwrap());
    assert_eq!(last - first + 1, idx.len(), "columns not contiguous");
    first..last + 1
}

/// Random stable discrete-time system with noise input gain.
pub fn random_stable_ss(rng: &mut ChaCha8Rng, n: usize, p: usize, m: usize) -> StateSpaceModel {
    let mut a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let rho = dynet::lti::eigenvalues(&a).iter().map(|z| z.norm()).fold(0.0, f64::max);
    a *= 0.9 / rho.max(1e-3);
    let b = DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0));
    let c = DMatrix::from_fn(p, n, |_, _| rng.random_range(-1.0..1.0));
    let d = DMatrix::from_fn(p, m, |_, _| rng.random_range(-1.0..1.0));
    let mut ss = StateSpaceModel::deterministic(a, b, c, d, Domain::Discrete);
    ss.k = DMatrix::from_fn(n, p, |_, _| rng.random_range(-1.0..1.0));
    ss
}

pub fn random_orthogonal(rng: &mut ChaCha8Rng, r: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, r, |_, _| rng.random_range(-1.0..1.0)).qr().q()
}
