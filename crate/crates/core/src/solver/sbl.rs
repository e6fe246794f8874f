//! Grouped sparse Bayesian learning with per-experiment noise variances.
//!
//! Prior `w_k ~ N(0, gamma_k I)` on every large group, noise
//! `xi_l ~ N(0, sigma_l^2 I)` per experiment; the hyperparameters maximize the
//! evidence through EM with the weights as hidden variables.

use log::debug;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::gaussian::{GaussianModel, Marginal};
use super::{Method, SolverResult};
use crate::error::{Error, Result};
use crate::regression::GroupedRegressionProblem;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SblConfig {
    pub gamma_init: f64,
    /// Initial noise variance as a fraction of each experiment's response
    /// variance.
    pub sigma2_init_fraction: f64,
    pub max_iter: usize,
    pub tol: f64,
    /// Groups with `gamma_k < prune_gamma * max_j gamma_j` are removed.
    pub prune_gamma: f64,
    /// Lower bound on each `sigma_l^2`, as a fraction of the experiment's
    /// mean squared response.
    pub sigma2_floor: f64,
}

impl Default for SblConfig {
    fn default() -> Self {
        SblConfig {
            gamma_init: 1.0,
            sigma2_init_fraction: 0.1,
            max_iter: 2000,
            tol: 1e-6,
            prune_gamma: 1e-4,
            sigma2_floor: 1e-12,
        }
    }
}

impl SblConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.gamma_init > 0.0
            && self.sigma2_init_fraction > 0.0
            && self.tol > 0.0
            && self.prune_gamma >= 0.0
            && self.sigma2_floor > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid SBL configuration: {self:?}")))
        }
    }
}

/// Hyperparameters and posterior of the EM iteration.
#[derive(Clone, Debug)]
pub struct SblState {
    /// `gamma_k` per large group; zero once pruned.
    pub gamma: Vec<f64>,
    pub active: Vec<bool>,
    pub sigma2: Vec<f64>,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    /// Columns that `mean` and `cov` refer to.
    pub columns: Vec<usize>,
    pub evidence_trace: Vec<f64>,
}

/// Evidence, posterior and EM updates for one problem.
pub struct Sbl<'a> {
    problem: &'a GroupedRegressionProblem,
    model: GaussianModel,
    floor: Vec<f64>,
}

impl<'a> Sbl<'a> {
    pub fn new(problem: &'a GroupedRegressionProblem, cfg: &SblConfig) -> Self {
        let model = GaussianModel::new(problem);
        let floor = model
            .blocks
            .iter()
            .map(|b| {
                let ms = b.yty / b.rows as f64;
                cfg.sigma2_floor * if ms > 0.0 { ms } else { 1.0 }
            })
            .collect();
        Sbl { problem, model, floor }
    }

    pub fn model(&self) -> &GaussianModel {
        &self.model
    }

    fn support(&self, gamma: &[f64], active: &[bool]) -> (Vec<usize>, Vec<f64>) {
        let mut cols = Vec::new();
        let mut var = Vec::new();
        for k in 0..self.problem.groups() {
            if active[k] {
                for c in self.problem.group_range(k) {
                    cols.push(c);
                    var.push(gamma[k]);
                }
            }
        }
        (cols, var)
    }

    /// `log p(y; gamma, Sigma)`.
    pub fn evidence(&self, gamma: &[f64], sigma2: &[f64]) -> Result<f64> {
        let active: Vec<bool> = gamma.iter().map(|g| *g > 0.0).collect();
        let (cols, var) = self.support(gamma, &active);
        Ok(self.model.marginal(&cols, &var, sigma2, false)?.log_evidence)
    }

    /// Posterior mean and covariance over all columns (zero rows/columns
    /// where `gamma_k = 0`).
    pub fn posterior(&self, gamma: &[f64], sigma2: &[f64]) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let active: Vec<bool> = gamma.iter().map(|g| *g > 0.0).collect();
        let (cols, var) = self.support(gamma, &active);
        let m = self.model.marginal(&cols, &var, sigma2, true)?;
        let n = self.problem.columns();
        let mut mean = DVector::zeros(n);
        let mut cov = DMatrix::zeros(n, n);
        let (mu, s) = (m.mean.unwrap(), m.cov.unwrap());
        for (r, &cr) in cols.iter().enumerate() {
            mean[cr] = mu[r];
            for (c, &cc) in cols.iter().enumerate() {
                cov[(cr, cc)] = s[(r, c)];
            }
        }
        Ok((mean, cov))
    }

    pub fn init(&self, cfg: &SblConfig) -> Result<SblState> {
        cfg.validate()?;
        let m = self.problem.groups();
        let sigma2: Vec<f64> = self
            .problem
            .row_blocks
            .iter()
            .zip(&self.floor)
            .map(|(r, &fl)| {
                let y = self.problem.y.rows_range(r.clone());
                (cfg.sigma2_init_fraction * y.variance()).max(fl)
            })
            .collect();
        let mut state = SblState {
            gamma: vec![cfg.gamma_init; m],
            active: vec![true; m],
            sigma2,
            mean: DVector::zeros(0),
            cov: DMatrix::zeros(0, 0),
            columns: Vec::new(),
            evidence_trace: Vec::new(),
        };
        self.refresh(&mut state)?;
        Ok(state)
    }

    fn refresh(&self, state: &mut SblState) -> Result<Marginal> {
        let (cols, var) = self.support(&state.gamma, &state.active);
        let m = self.model.marginal(&cols, &var, &state.sigma2, true)?;
        state.mean = m.mean.clone().unwrap();
        state.cov = m.cov.clone().unwrap();
        state.columns = cols;
        Ok(m)
    }

    /// One EM iteration: M-step from the current posterior, pruning, then the
    /// E-step for the new hyperparameters. Records the evidence of the
    /// hyperparameters the step started from.
    pub fn em_step(&self, state: &mut SblState, cfg: &SblConfig) -> Result<()> {
        if state.evidence_trace.is_empty() {
            let ev = self.evidence_of(state)?;
            state.evidence_trace.push(ev);
        }
        let pos: std::collections::HashMap<usize, usize> =
            state.columns.iter().enumerate().map(|(i, &c)| (c, i)).collect();

        // gamma_k: mean of mu^2 + Sigma_w,ii over the group
        for k in 0..self.problem.groups() {
            if !state.active[k] {
                continue;
            }
            let range = self.problem.group_range(k);
            let size = range.len() as f64;
            let s: f64 = range
                .map(|c| {
                    let i = pos[&c];
                    state.mean[i].powi(2) + state.cov[(i, i)]
                })
                .sum();
            state.gamma[k] = s / size;
        }

        // sigma_l^2 = (||y_l - A_l mu||^2 + tr(G_l Sigma_w)) / N_l
        for (l, range) in self.problem.row_blocks.iter().enumerate() {
            let a = self.problem.a.rows_range(range.clone());
            let y = self.problem.y.rows_range(range.clone());
            let mut resid = y.into_owned();
            for (i, &c) in state.columns.iter().enumerate() {
                resid.axpy(-state.mean[i], &a.column(c), 1.0);
            }
            let gram = &self.model.blocks[l].gram;
            let mut trace = 0.0;
            for (i, &ci) in state.columns.iter().enumerate() {
                for (j, &cj) in state.columns.iter().enumerate() {
                    trace += gram[(ci, cj)] * state.cov[(j, i)];
                }
            }
            let v = (resid.norm_squared() + trace) / range.len() as f64;
            state.sigma2[l] = v.max(self.floor[l]);
        }

        if cfg.prune_gamma > 0.0 {
            let max = state.gamma.iter().copied().fold(0.0, f64::max);
            for k in 0..state.gamma.len() {
                if state.active[k] && state.gamma[k] < cfg.prune_gamma * max {
                    state.active[k] = false;
                    state.gamma[k] = 0.0;
                }
            }
        }
        for k in 0..state.gamma.len() {
            if state.active[k] && state.gamma[k] <= 0.0 {
                state.active[k] = false;
                state.gamma[k] = 0.0;
            }
        }
        let m = self.refresh(state)?;
        state.evidence_trace.push(m.log_evidence);
        Ok(())
    }

    fn evidence_of(&self, state: &SblState) -> Result<f64> {
        let (cols, var) = self.support(&state.gamma, &state.active);
        Ok(self
            .model
            .marginal(&cols, &var, &state.sigma2, false)?
            .log_evidence)
    }
}

/// Run EM to convergence; the weights are the posterior mean.
pub fn solve_sbl(problem: &GroupedRegressionProblem, cfg: &SblConfig) -> Result<SblOutcome> {
    let sbl = Sbl::new(problem, cfg);
    let mut state = sbl.init(cfg)?;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        let before = state.gamma.clone();
        sbl.em_step(&mut state, cfg)?;
        iterations += 1;
        // relative change of every surviving gamma_k
        let change = before
            .iter()
            .zip(&state.gamma)
            .zip(&state.active)
            .filter(|(_, on)| **on)
            .map(|((a, b), _)| (a - b).abs() / a.abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        if change < cfg.tol || !state.active.iter().any(|a| *a) {
            converged = true;
            break;
        }
    }
    debug!(
        "output {}: SBL {iterations} iterations, {} active groups",
        problem.output,
        state.active.iter().filter(|a| **a).count()
    );
    let mut w = DVector::zeros(problem.columns());
    for (i, &c) in state.columns.iter().enumerate() {
        w[c] = state.mean[i];
    }
    let mut res = SolverResult::new(Method::Gsbl, problem, w);
    for (k, on) in res.active.iter_mut().enumerate() {
        *on &= state.active[k];
    }
    res.iterations = iterations;
    res.converged = converged;
    res.sigma2_per_experiment = Some(state.sigma2.clone());
    res.evidence_trace = Some(state.evidence_trace.clone());
    Ok(SblOutcome { result: res, state })
}

/// Solver result together with the final EM state.
#[derive(Clone, Debug)]
pub struct SblOutcome {
    pub result: SolverResult,
    pub state: SblState,
}
