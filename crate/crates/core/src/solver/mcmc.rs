//! Group selection by Metropolis-Hastings within systematic-scan Gibbs.
//!
//! Each large group `k` carries an indicator `s_k ~ Bernoulli(p)`; the
//! weights are integrated out, leaving `p(s, gamma, Sigma | y)` with
//! `y ~ N(0, Sigma + A S Gamma S A^T)`, inverse-gamma priors on `gamma` and on
//! each `sigma_l^2`. One sweep flips one uniformly chosen indicator, then
//! random-walks `gamma` and `sigma^2` jointly, each with an MH accept step.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::gaussian::GaussianModel;
use super::{mask_inactive, AcceptanceRates, Method, SolverResult};
use crate::error::{Error, Result};
use crate::regression::GroupedRegressionProblem;

/// Parametrization of the prior variances.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaMode {
    /// One `gamma_k` per large group.
    PerGroup,
    /// A single `gamma` shared by all groups.
    Scalar,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McmcConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub prior_inclusion: f64,
    /// Inverse-gamma shape and rate of the `gamma` prior.
    pub gamma_shape: f64,
    pub gamma_rate: f64,
    /// Inverse-gamma shape and rate of each `sigma_l^2` prior.
    pub sigma2_shape: f64,
    pub sigma2_rate: f64,
    /// Initial random-walk standard deviation relative to the initial value.
    pub step_fraction: f64,
    /// Tune step sizes towards 20-50% acceptance during the first half of
    /// burn-in.
    pub adapt: bool,
    pub threshold: f64,
    pub seed: u64,
    pub gamma_mode: GammaMode,
    pub gamma_init: f64,
    pub sigma2_init_fraction: f64,
    pub update_gamma: bool,
    pub update_sigma2: bool,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            iterations: 20_000,
            burn_in: 5_000,
            thin: 5,
            prior_inclusion: 0.5,
            gamma_shape: 1e-4,
            gamma_rate: 1e-4,
            sigma2_shape: 1e-4,
            sigma2_rate: 1e-4,
            step_fraction: 0.1,
            adapt: true,
            threshold: 0.5,
            seed: 0,
            gamma_mode: GammaMode::Scalar,
            gamma_init: 1.0,
            sigma2_init_fraction: 0.1,
            update_gamma: true,
            update_sigma2: true,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.iterations > self.burn_in
            && self.thin >= 1
            && self.prior_inclusion > 0.0
            && self.prior_inclusion < 1.0
            && [self.gamma_shape, self.gamma_rate, self.sigma2_shape, self.sigma2_rate]
                .iter()
                .all(|v| *v > 0.0)
            && self.step_fraction > 0.0
            && self.gamma_init > 0.0
            && self.sigma2_init_fraction > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid MCMC configuration: {self:?}")))
        }
    }
}

/// Current point of the chain.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainState {
    pub s: Vec<bool>,
    /// Length `M` (per-group mode) or 1 (scalar mode).
    pub gamma: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub log_post: f64,
}

/// Collapsed posterior of one problem.
pub struct Mcmc<'a> {
    problem: &'a GroupedRegressionProblem,
    model: GaussianModel,
    cfg: McmcConfig,
}

/// `log IG(x; a, b)` without the normalizing constant.
fn log_inv_gamma(x: f64, a: f64, b: f64) -> f64 {
    -(a + 1.0) * x.ln() - b / x
}

impl<'a> Mcmc<'a> {
    pub fn new(problem: &'a GroupedRegressionProblem, cfg: &McmcConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Mcmc {
            problem,
            model: GaussianModel::new(problem),
            cfg: cfg.clone(),
        })
    }

    fn gamma_of(&self, gamma: &[f64], k: usize) -> f64 {
        match self.cfg.gamma_mode {
            GammaMode::PerGroup => gamma[k],
            GammaMode::Scalar => gamma[0],
        }
    }

    /// Unnormalized `log p(s, gamma, Sigma | y)`; `-inf` outside the prior
    /// support.
    pub fn log_posterior(&self, s: &[bool], gamma: &[f64], sigma2: &[f64]) -> Result<f64> {
        if gamma.iter().chain(sigma2).any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Ok(f64::NEG_INFINITY);
        }
        let c = &self.cfg;
        let mut lp = 0.0;
        for &on in s {
            lp += if on {
                c.prior_inclusion.ln()
            } else {
                (1.0 - c.prior_inclusion).ln()
            };
        }
        lp += gamma
            .iter()
            .map(|&g| log_inv_gamma(g, c.gamma_shape, c.gamma_rate))
            .sum::<f64>();
        lp += sigma2
            .iter()
            .map(|&v| log_inv_gamma(v, c.sigma2_shape, c.sigma2_rate))
            .sum::<f64>();
        let mut cols = Vec::new();
        let mut var = Vec::new();
        for (k, &on) in s.iter().enumerate() {
            if on {
                let g = self.gamma_of(gamma, k);
                for col in self.problem.group_range(k) {
                    cols.push(col);
                    var.push(g);
                }
            }
        }
        Ok(lp + self.model.marginal(&cols, &var, sigma2, false)?.log_evidence)
    }

    pub fn initial_state(&self) -> Result<ChainState> {
        let m = self.problem.groups();
        let n_gamma = match self.cfg.gamma_mode {
            GammaMode::PerGroup => m,
            GammaMode::Scalar => 1,
        };
        let sigma2: Vec<f64> = self
            .problem
            .row_blocks
            .iter()
            .map(|r| {
                let y = self.problem.y.rows_range(r.clone());
                let v = self.cfg.sigma2_init_fraction * y.variance();
                if v > 0.0 {
                    v
                } else {
                    self.cfg.sigma2_init_fraction
                }
            })
            .collect();
        let s = vec![true; m];
        let gamma = vec![self.cfg.gamma_init; n_gamma];
        let log_post = self.log_posterior(&s, &gamma, &sigma2)?;
        Ok(ChainState {
            s,
            gamma,
            sigma2,
            log_post,
        })
    }

    fn accept(rng: &mut ChaCha8Rng, log_ratio: f64) -> bool {
        log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio
    }

    /// Flip indicator `k`; returns whether the move was accepted.
    pub fn flip_step(&self, st: &mut ChainState, k: usize, rng: &mut ChaCha8Rng) -> Result<bool> {
        let mut s = st.s.clone();
        s[k] = !s[k];
        let lp = self.log_posterior(&s, &st.gamma, &st.sigma2)?;
        let ok = Self::accept(rng, lp - st.log_post);
        if ok {
            st.s = s;
            st.log_post = lp;
        }
        Ok(ok)
    }

    fn walk(rng: &mut ChaCha8Rng, x: &[f64], step: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(step)
            .map(|(v, s)| v + s * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }

    /// One full sweep with the given random-walk steps; returns acceptance
    /// flags of the three moves.
    pub fn sweep(
        &self,
        st: &mut ChainState,
        gamma_step: &[f64],
        sigma_step: &[f64],
        rng: &mut ChaCha8Rng,
    ) -> Result<[bool; 3]> {
        let k = rng.random_range(0..st.s.len());
        let a0 = self.flip_step(st, k, rng)?;
        let mut a1 = false;
        if self.cfg.update_gamma {
            let g = Self::walk(rng, &st.gamma, gamma_step);
            let lp = self.log_posterior(&st.s, &g, &st.sigma2)?;
            if Self::accept(rng, lp - st.log_post) {
                st.gamma = g;
                st.log_post = lp;
                a1 = true;
            }
        }
        let mut a2 = false;
        if self.cfg.update_sigma2 {
            let v = Self::walk(rng, &st.sigma2, sigma_step);
            let lp = self.log_posterior(&st.s, &st.gamma, &v)?;
            if Self::accept(rng, lp - st.log_post) {
                st.sigma2 = v;
                st.log_post = lp;
                a2 = true;
            }
        }
        Ok([a0, a1, a2])
    }
}

/// Output of [`run_chain`].
#[derive(Clone, Debug)]
pub struct ChainSummary {
    pub inclusion: Vec<f64>,
    pub rates: AcceptanceRates,
    pub samples: usize,
    pub last: ChainState,
}

/// Run the chain and average the indicators over the kept sweeps.
pub fn run_chain(mcmc: &Mcmc<'_>) -> Result<ChainSummary> {
    let cfg = &mcmc.cfg;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut st = mcmc.initial_state()?;
    let mut gamma_step: Vec<f64> = st.gamma.iter().map(|g| g * cfg.step_fraction).collect();
    let mut sigma_step: Vec<f64> = st.sigma2.iter().map(|v| v * cfg.step_fraction).collect();
    let tune_until = if cfg.adapt { cfg.burn_in / 2 } else { 0 };
    const WINDOW: usize = 50;
    let mut window = [0usize; 3];
    let mut accepted = [0usize; 3];
    let mut counts = vec![0usize; st.s.len()];
    let mut kept = 0usize;
    for it in 0..cfg.iterations {
        let acc = mcmc.sweep(&mut st, &gamma_step, &sigma_step, &mut rng)?;
        if it < tune_until {
            for (w, a) in window.iter_mut().zip(acc) {
                *w += a as usize;
            }
            if (it + 1) % WINDOW == 0 {
                for (rate, step) in [
                    (window[1], &mut gamma_step),
                    (window[2], &mut sigma_step),
                ] {
                    let r = rate as f64 / WINDOW as f64;
                    let f = if r > 0.5 {
                        1.5
                    } else if r < 0.2 {
                        0.6
                    } else {
                        1.0
                    };
                    step.iter_mut().for_each(|s| *s *= f);
                }
                window = [0; 3];
            }
        }
        if it >= cfg.burn_in {
            for (c, a) in accepted.iter_mut().zip(acc) {
                *c += a as usize;
            }
            if (it - cfg.burn_in) % cfg.thin == 0 {
                kept += 1;
                for (c, &on) in counts.iter_mut().zip(&st.s) {
                    *c += on as usize;
                }
            }
        }
    }
    let post = (cfg.iterations - cfg.burn_in) as f64;
    Ok(ChainSummary {
        inclusion: counts.iter().map(|&c| c as f64 / kept as f64).collect(),
        rates: AcceptanceRates {
            indicator: accepted[0] as f64 / post,
            gamma: accepted[1] as f64 / post,
            sigma2: accepted[2] as f64 / post,
        },
        samples: kept,
        last: st,
    })
}

/// Least squares on the columns of the active groups; minimum-norm when the
/// restricted design is rank deficient.
pub fn restricted_least_squares(
    problem: &GroupedRegressionProblem,
    active: &[bool],
) -> (DVector<f64>, bool) {
    let cols: Vec<usize> = (0..problem.groups())
        .filter(|&k| active[k])
        .flat_map(|k| problem.group_range(k))
        .collect();
    let mut w = DVector::zeros(problem.columns());
    if cols.is_empty() {
        return (w, false);
    }
    let a = DMatrix::from_fn(problem.a.nrows(), cols.len(), |r, c| problem.a[(r, cols[c])]);
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let eps = smax * 1e-12 * (problem.a.nrows().max(cols.len()) as f64);
    let rank = svd.rank(eps);
    let sol = svd.solve(&problem.y, eps).expect("u and v computed");
    for (i, &c) in cols.iter().enumerate() {
        w[c] = sol[i];
    }
    (w, rank < cols.len())
}

/// Posterior inclusion probabilities, thresholded, followed by least squares
/// on the selected groups.
pub fn solve_mcmc(problem: &GroupedRegressionProblem, cfg: &McmcConfig) -> Result<SolverResult> {
    let mcmc = Mcmc::new(problem, cfg)?;
    let chain = run_chain(&mcmc)?;
    let active: Vec<bool> = chain.inclusion.iter().map(|&p| p > cfg.threshold).collect();
    let (mut w, rank_deficient) = restricted_least_squares(problem, &active);
    mask_inactive(&mut w, problem, &active);
    let mut res = SolverResult::new(Method::Gsmc, problem, w);
    for (r, a) in res.active.iter_mut().zip(&active) {
        *r &= *a;
    }
    res.iterations = cfg.iterations;
    res.inclusion_probabilities = Some(chain.inclusion);
    res.acceptance_rates = Some(chain.rates);
    res.chain_length = Some(cfg.iterations);
    res.sigma2_per_experiment = Some(chain.last.sigma2);
    res.rank_deficient = rank_deficient;
    Ok(res)
}
