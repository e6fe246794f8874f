//! Group lasso and iterative reweighted group l1 via ADMM.
//!
//! Objective: `1/2 ||y - A w||^2 + lambda * sum_k nu_k sqrt(rho^S_k) ||w_k||_2`.
//! With the `1/2` on the loss, this `lambda` is twice the one of the
//! unhalved formulation `||y - A w||^2 + lambda' sum ...` (`lambda' = 2 lambda`).

use std::ops::Range;

use log::debug;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::{Method, SolverResult};
use crate::error::{Error, Result};
use crate::regression::GroupedRegressionProblem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum L1Mode {
    GroupLasso,
    Irl1,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct L1Config {
    pub lambda: f64,
    pub mode: L1Mode,
    pub eps_initial: f64,
    pub eps_decay: f64,
    pub eps_floor: f64,
    /// Shrink epsilon towards the median group norm instead of the fixed
    /// schedule.
    pub adaptive_eps: bool,
    pub outer_max_iter: usize,
    pub outer_tol: f64,
    pub admm_tol: f64,
    pub admm_max_iter: usize,
    pub beta: f64,
    /// Groups with norm below this fraction of the largest group norm are
    /// set to zero.
    pub zero_threshold: f64,
}

impl Default for L1Config {
    fn default() -> Self {
        L1Config {
            lambda: 0.1,
            mode: L1Mode::Irl1,
            eps_initial: 0.1,
            eps_decay: 10.0,
            eps_floor: 1e-8,
            adaptive_eps: false,
            outer_max_iter: 10,
            outer_tol: 1e-4,
            admm_tol: 1e-6,
            admm_max_iter: 10_000,
            beta: 0.5,
            zero_threshold: 1e-5,
        }
    }
}

impl L1Config {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lambda > 0.0
            && self.beta > 0.0
            && self.beta < 1.0
            && self.eps_floor > 0.0
            && self.eps_initial >= self.eps_floor
            && self.eps_decay > 1.0
            && self.admm_tol > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid l1 configuration: {self:?}")))
        }
    }
}

/// Epsilon values of the reweighting schedule, from the initial value down to
/// the floor.
pub fn epsilon_schedule(cfg: &L1Config) -> Vec<f64> {
    let mut out = Vec::new();
    let mut k = 0;
    loop {
        let e = cfg.eps_initial / cfg.eps_decay.powi(k);
        if e < cfg.eps_floor * (1.0 - 1e-9) {
            break;
        }
        out.push(e);
        k += 1;
    }
    out
}

/// Block soft threshold `(1 - tau/||v||)_+ v`.
pub fn prox_group(v: &DVector<f64>, tau: f64) -> DVector<f64> {
    let n = v.norm();
    if n <= tau || n == 0.0 {
        DVector::zeros(v.len())
    } else {
        v * (1.0 - tau / n)
    }
}

/// Proximal operator of `1/2 ||y - A w||^2`: `(I + gamma A^T A)^-1 (gamma A^T y + v)`,
/// with the factorization cached per `gamma`.
pub struct QuadraticProx {
    gram: DMatrix<f64>,
    aty: DVector<f64>,
    gamma: f64,
    chol: Cholesky<f64, Dyn>,
}

impl QuadraticProx {
    pub fn new(gram: DMatrix<f64>, aty: DVector<f64>, gamma: f64) -> Result<Self> {
        let chol = Self::factor(&gram, gamma)?;
        Ok(QuadraticProx {
            gram,
            aty,
            gamma,
            chol,
        })
    }

    fn factor(gram: &DMatrix<f64>, gamma: f64) -> Result<Cholesky<f64, Dyn>> {
        let n = gram.nrows();
        let m = DMatrix::identity(n, n) + gram * gamma;
        Cholesky::new(m).ok_or_else(|| Error::NotPositiveDefinite {
            context: "I + gamma A^T A".into(),
            condition: f64::INFINITY,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn set_gamma(&mut self, gamma: f64) -> Result<()> {
        if gamma != self.gamma {
            self.chol = Self::factor(&self.gram, gamma)?;
            self.gamma = gamma;
        }
        Ok(())
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(&(&self.aty * self.gamma + v))
    }
}

/// Objective `1/2 ||y - A w||^2 + sum_k tau_k ||w_k||`.
pub fn weighted_objective(
    problem: &GroupedRegressionProblem,
    w: &DVector<f64>,
    tau: &[f64],
) -> f64 {
    let r = &problem.y - &problem.a * w;
    0.5 * r.norm_squared()
        + (0..problem.groups())
            .map(|k| tau[k] * w.rows_range(problem.group_range(k)).norm())
            .sum::<f64>()
}

/// Group-lasso objective with weights `lambda sqrt(rho^S_k)`.
pub fn group_lasso_objective(problem: &GroupedRegressionProblem, w: &DVector<f64>, lambda: f64) -> f64 {
    weighted_objective(problem, w, &thresholds(problem, lambda, None))
}

/// Largest violation of the optimality conditions of the weighted objective.
pub fn kkt_residual(problem: &GroupedRegressionProblem, w: &DVector<f64>, tau: &[f64]) -> f64 {
    let grad = problem.a.transpose() * (&problem.a * w - &problem.y);
    (0..problem.groups())
        .map(|k| {
            let r = problem.group_range(k);
            let gk = grad.rows_range(r.clone());
            let wk = w.rows_range(r);
            let n = wk.norm();
            if n > 0.0 {
                (gk + wk * (tau[k] / n)).norm()
            } else {
                (gk.norm() - tau[k]).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

fn thresholds(problem: &GroupedRegressionProblem, lambda: f64, nu: Option<&[f64]>) -> Vec<f64> {
    problem
        .rho_large()
        .iter()
        .enumerate()
        .map(|(k, &r)| lambda * (r as f64).sqrt() * nu.map_or(1.0, |n| n[k]))
        .collect()
}

struct AdmmState {
    w: DVector<f64>,
    z: DVector<f64>,
    u: DVector<f64>,
}

#[derive(Default)]
struct AdmmTrace {
    iterations: usize,
    converged: bool,
    objective: Vec<f64>,
    primal: Vec<f64>,
    dual: Vec<f64>,
    steps: Vec<f64>,
}

fn admm(
    prox: &mut QuadraticProx,
    ranges: &[Range<usize>],
    tau: &[f64],
    state: &mut AdmmState,
    cfg: &L1Config,
    objective: impl Fn(&DVector<f64>) -> f64,
    trace: &mut AdmmTrace,
) -> Result<()> {
    let n = state.w.len();
    let tol = cfg.admm_tol * (n as f64).sqrt();
    for _ in 0..cfg.admm_max_iter {
        let w_hat = loop {
            let cand = prox.apply(&(&state.z - &state.u));
            let d = &cand - &state.w;
            // f quadratic: the sufficient-decrease test reduces to gamma d'Gd <= ||d||^2
            let curv = d.dot(&(&prox.gram * &d));
            if prox.gamma() * curv <= d.norm_squared() * (1.0 + 1e-12) {
                break cand;
            }
            let g = prox.gamma() * cfg.beta;
            prox.set_gamma(g)?;
            // keep the unscaled dual u / gamma fixed
            state.u *= cfg.beta;
            trace.steps.push(g);
        };
        let gamma = prox.gamma();
        state.w = w_hat;
        let v = &state.w + &state.u;
        let mut z = DVector::zeros(n);
        for (r, &t) in ranges.iter().zip(tau) {
            let vk = v.rows_range(r.clone()).into_owned();
            z.rows_range_mut(r.clone()).copy_from(&prox_group(&vk, gamma * t));
        }
        let dual = (&z - &state.z).norm() / gamma;
        state.z = z;
        state.u += &state.w - &state.z;
        let primal = (&state.w - &state.z).norm();
        trace.iterations += 1;
        trace.primal.push(primal);
        trace.dual.push(dual);
        trace.objective.push(objective(&state.z));
        if primal < tol && dual < tol {
            trace.converged = true;
            return Ok(());
        }
    }
    trace.converged = false;
    Ok(())
}

fn declare_zeros(problem: &GroupedRegressionProblem, w: &mut DVector<f64>, rel: f64) {
    let norms = problem.group_norms(w).expect("sized from problem");
    let max = norms.iter().copied().fold(0.0, f64::max);
    for (k, n) in norms.iter().enumerate() {
        if *n < rel * max {
            w.rows_range_mut(problem.group_range(k)).fill(0.0);
        }
    }
}

fn solve_weighted(
    problem: &GroupedRegressionProblem,
    cfg: &L1Config,
    nu_schedule: impl FnMut(usize, &DVector<f64>, &[f64]) -> Option<Vec<f64>>,
) -> Result<SolverResult> {
    cfg.validate()?;
    let gram = problem.a.transpose() * &problem.a;
    let aty = problem.a.transpose() * &problem.y;
    let mut prox = QuadraticProx::new(gram, aty, 1.0)?;
    let ranges: Vec<_> = (0..problem.groups()).map(|k| problem.group_range(k)).collect();
    let n = problem.columns();
    let mut state = AdmmState {
        w: DVector::zeros(n),
        z: DVector::zeros(n),
        u: DVector::zeros(n),
    };
    let mut trace = AdmmTrace::default();
    let mut nu = vec![1.0; problem.groups()];
    let mut schedule = nu_schedule;
    let mut all_converged = true;
    let mut outer = 0;
    loop {
        let tau = thresholds(problem, cfg.lambda, Some(&nu));
        let before = state.z.clone();
        let mut t = AdmmTrace::default();
        admm(
            &mut prox,
            &ranges,
            &tau,
            &mut state,
            cfg,
            |z| weighted_objective(problem, z, &tau),
            &mut t,
        )?;
        all_converged &= t.converged;
        debug!(
            "output {} outer {outer}: {} admm iterations, gamma {:.3e}",
            problem.output,
            t.iterations,
            prox.gamma()
        );
        trace.iterations += t.iterations;
        trace.objective.extend(t.objective);
        trace.primal.extend(t.primal);
        trace.dual.extend(t.dual);
        trace.steps.extend(t.steps);
        outer += 1;
        let change = (&state.z - &before).norm() / before.norm().max(f64::MIN_POSITIVE);
        if outer > 1 && change < cfg.outer_tol {
            break;
        }
        let norms = problem.group_norms(&state.z)?;
        match schedule(outer - 1, &state.z, &norms) {
            Some(next) => nu = next,
            None => break,
        }
    }
    let mut w = state.z;
    declare_zeros(problem, &mut w, cfg.zero_threshold);
    let mut res = SolverResult::new(Method::Girl1, problem, w);
    res.iterations = trace.iterations;
    res.converged = all_converged;
    res.objective_trace = trace.objective;
    res.primal_residuals = trace.primal;
    res.dual_residuals = trace.dual;
    res.step_sizes = trace.steps;
    Ok(res)
}

/// Group lasso (all `nu_k = 1`).
pub fn solve_group_lasso(problem: &GroupedRegressionProblem, cfg: &L1Config) -> Result<SolverResult> {
    solve_weighted(problem, cfg, |_, _, _| None)
}

/// Iterative reweighted group l1: `nu_k = 1 / (||w_k|| + eps)` between
/// weighted group-lasso solves, warm started.
pub fn solve_irl1(problem: &GroupedRegressionProblem, cfg: &L1Config) -> Result<SolverResult> {
    let eps = epsilon_schedule(cfg);
    let max_outer = cfg.outer_max_iter.max(1);
    solve_weighted(problem, cfg, |k, _, norms| {
        if k + 1 >= max_outer {
            return None;
        }
        let e = if cfg.adaptive_eps {
            let mut sorted = norms.to_vec();
            sorted.sort_by(f64::total_cmp);
            (sorted[sorted.len() / 2] / cfg.eps_decay).max(cfg.eps_floor)
        } else {
            eps[k.min(eps.len() - 1)]
        };
        Some(norms.iter().map(|n| 1.0 / (n + e)).collect())
    })
}

/// Dispatch on [`L1Config::mode`].
pub fn solve_l1(problem: &GroupedRegressionProblem, cfg: &L1Config) -> Result<SolverResult> {
    match cfg.mode {
        L1Mode::GroupLasso => solve_group_lasso(problem, cfg),
        L1Mode::Irl1 => solve_irl1(problem, cfg),
    }
}

/// One point of a lambda sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaPoint {
    pub lambda: f64,
    pub active_groups: usize,
    pub density: f64,
}

/// `count` log-spaced lambdas between `lo` and `hi`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Fraction of active groups for each lambda.
pub fn lambda_sweep(
    problem: &GroupedRegressionProblem,
    cfg: &L1Config,
    lambdas: &[f64],
) -> Result<Vec<LambdaPoint>> {
    lambdas
        .iter()
        .map(|&lambda| {
            let c = L1Config { lambda, ..cfg.clone() };
            let r = solve_l1(problem, &c)?;
            let active = r.active.iter().filter(|a| **a).count();
            Ok(LambdaPoint {
                lambda,
                active_groups: active,
                density: active as f64 / problem.groups().max(1) as f64,
            })
        })
        .collect()
}
