//! Network reconstruction: one grouped regression per output, solved with
//! the chosen method, assembled into a Boolean network.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::BooleanNetwork;
use crate::regression::{build_problem, ColumnScaling, ExperimentData, GroupOrders, GroupedRegressionProblem};
use crate::solver::l1::{solve_l1, L1Config};
use crate::solver::mcmc::{solve_mcmc, McmcConfig};
use crate::solver::sbl::{solve_sbl, SblConfig};
use crate::solver::{Method, SolverResult};

/// Preprocessing of each per-output problem before solving.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Standardize {
    /// Solve on the raw regressors.
    #[default]
    None,
    /// Unit-norm regressor columns and unit-norm response; weights are
    /// mapped back afterwards.
    UnitNorm,
}

/// Settings of a reconstruction run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReconstructionConfig {
    pub method: Method,
    /// ARX order used for every group.
    pub order: usize,
    /// Separate parameters per experiment; `false` shares them.
    pub heterogeneous: bool,
    pub standardize: Standardize,
    pub l1: L1Config,
    pub sbl: SblConfig,
    pub mcmc: McmcConfig,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        ReconstructionConfig {
            method: Method::Girl1,
            order: 2,
            heterogeneous: true,
            standardize: Standardize::None,
            l1: L1Config::default(),
            sbl: SblConfig::default(),
            mcmc: McmcConfig::default(),
        }
    }
}

/// Reconstructed network with the per-output solver results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    pub network: BooleanNetwork,
    /// Structure seen by each experiment alone.
    pub per_experiment: Vec<BooleanNetwork>,
    pub results: Vec<SolverResult>,
}

/// Solve one prepared problem with the configured method.
pub fn solve(problem: &GroupedRegressionProblem, cfg: &ReconstructionConfig) -> Result<SolverResult> {
    match cfg.standardize {
        Standardize::None => solve_raw(problem, cfg),
        Standardize::UnitNorm => {
            let mut scaled = problem.clone();
            let cols = ColumnScaling::normalize(&mut scaled);
            let ny = scaled.y.norm();
            let ny = if ny > 0.0 { ny } else { 1.0 };
            scaled.y /= ny;
            let mut res = solve_raw(&scaled, cfg)?;
            let w: DVector<f64> = cols.unscale(&res.weights) * ny;
            res.group_norms = problem.group_norms(&w)?;
            res.weights = w;
            Ok(res)
        }
    }
}

fn solve_raw(problem: &GroupedRegressionProblem, cfg: &ReconstructionConfig) -> Result<SolverResult> {
    match cfg.method {
        Method::Girl1 => solve_l1(problem, &cfg.l1),
        Method::Gsbl => Ok(solve_sbl(problem, &cfg.sbl)?.result),
        Method::Gsmc => {
            let mc = McmcConfig {
                seed: cfg.mcmc.seed.wrapping_add(problem.output as u64),
                ..cfg.mcmc.clone()
            };
            solve_mcmc(problem, &mc)
        }
    }
}

/// Reconstruct the network from all experiments. Arc `y_j -> y_i` is present
/// when group `j` of output `i` is active; likewise `u_k -> y_i`.
pub fn reconstruct(data: &[ExperimentData], cfg: &ReconstructionConfig) -> Result<Reconstruction> {
    let first = data
        .first()
        .ok_or_else(|| Error::InvalidArgument("no experiments".into()))?;
    let (p, m) = (first.outputs(), first.inputs());
    if data.iter().any(|d| d.outputs() != p || d.inputs() != m) {
        return Err(Error::Dimension("experiments disagree on p or m".into()));
    }
    let l_count = if cfg.heterogeneous { data.len() } else { 1 };
    let mut network = BooleanNetwork::new(p, m);
    let mut per_experiment = vec![BooleanNetwork::new(p, m); l_count];
    let mut results = Vec::with_capacity(p);
    for i in 0..p {
        let orders = GroupOrders::uniform(i, p, m, cfg.order);
        let problem = build_problem(data, &orders, cfg.heterogeneous)?;
        let res = solve(&problem, cfg)?;
        let per = res.per_experiment_activity(&problem);
        for k in 0..problem.groups() {
            if k == i {
                continue;
            }
            let add = |net: &mut BooleanNetwork| {
                if k < p {
                    net.add_yy(k, i)
                } else {
                    net.add_uy(k - p, i)
                }
            };
            if res.active[k] {
                add(&mut network)?;
            }
            for (l, net) in per_experiment.iter_mut().enumerate() {
                if per[l][k] {
                    add(net)?;
                }
            }
        }
        results.push(res);
    }
    Ok(Reconstruction {
        network,
        per_experiment,
        results,
    })
}
