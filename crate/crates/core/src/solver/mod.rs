//! Group-sparse solvers for [`GroupedRegressionProblem`]s.

pub mod gaussian;
pub mod l1;
pub mod mcmc;
pub mod sbl;

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regression::GroupedRegressionProblem;

/// Reconstruction method.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Iterative reweighted group l1 via ADMM.
    Girl1,
    /// Grouped sparse Bayesian learning.
    Gsbl,
    /// Grouped indicator-model MCMC.
    Gsmc,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Girl1, Method::Gsbl, Method::Gsmc];

    pub fn name(self) -> &'static str {
        match self {
            Method::Girl1 => "girl1",
            Method::Gsbl => "gsbl",
            Method::Gsmc => "gsmc",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parse(format!("unknown method '{s}'")))
    }
}

/// Acceptance rates of the three MCMC move types.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceRates {
    pub indicator: f64,
    pub gamma: f64,
    pub sigma2: f64,
}

/// Output of a solver. Method-specific diagnostics are `None` when not
/// produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverResult {
    pub method: Method,
    pub output: usize,
    pub weights: DVector<f64>,
    pub group_norms: Vec<f64>,
    pub active: Vec<bool>,
    pub iterations: usize,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub objective_trace: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub primal_residuals: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dual_residuals: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub step_sizes: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2_per_experiment: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence_trace: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inclusion_probabilities: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acceptance_rates: Option<AcceptanceRates>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain_length: Option<usize>,
    #[serde(default)]
    pub rank_deficient: bool,
}

impl SolverResult {
    pub(crate) fn new(method: Method, problem: &GroupedRegressionProblem, weights: DVector<f64>) -> Self {
        let group_norms = problem
            .group_norms(&weights)
            .expect("weights sized from problem");
        let active = group_norms.iter().map(|&n| n > 0.0).collect();
        SolverResult {
            method,
            output: problem.output,
            weights,
            group_norms,
            active,
            iterations: 0,
            converged: true,
            objective_trace: Vec::new(),
            primal_residuals: Vec::new(),
            dual_residuals: Vec::new(),
            step_sizes: Vec::new(),
            sigma2_per_experiment: None,
            evidence_trace: None,
            inclusion_probabilities: None,
            acceptance_rates: None,
            chain_length: None,
            rank_deficient: false,
        }
    }

    /// Activity of every small group, indexed `[experiment][group]`. Groups
    /// switched off at the large-group level are off in every experiment.
    pub fn per_experiment_activity(&self, problem: &GroupedRegressionProblem) -> Vec<Vec<bool>> {
        (0..problem.replicas)
            .map(|l| {
                (0..problem.groups())
                    .map(|k| {
                        self.active[k]
                            && self
                                .weights
                                .rows_range(problem.small_group_range(k, l))
                                .iter()
                                .any(|v| *v != 0.0)
                    })
                    .collect()
            })
            .collect()
    }
}

/// Zero every column outside the active groups.
pub(crate) fn mask_inactive(
    w: &mut DVector<f64>,
    problem: &GroupedRegressionProblem,
    active: &[bool],
) {
    for (k, &on) in active.iter().enumerate() {
        if !on {
            w.rows_range_mut(problem.group_range(k)).fill(0.0);
        }
    }
}
