//! Gaussian marginal likelihood of `y = A w + xi` with `w ~ N(0, Gamma)` on a
//! subset of columns and block-wise noise `xi_l ~ N(0, sigma_l^2 I)`.
//!
//! Everything is computed in column space through
//! `B = I + Gamma^1/2 (A^T Sigma^-1 A) Gamma^1/2`, so the cost depends on the
//! number of active columns rather than the number of rows.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::regression::GroupedRegressionProblem;

const LOG_2PI: f64 = 1.837_877_066_409_345_5;

/// Sufficient statistics of one noise block.
#[derive(Clone, Debug)]
pub struct BlockStats {
    pub gram: DMatrix<f64>,
    pub aty: DVector<f64>,
    pub yty: f64,
    pub rows: usize,
}

/// Per-block Gram matrices of a problem.
#[derive(Clone, Debug)]
pub struct GaussianModel {
    pub blocks: Vec<BlockStats>,
    pub columns: usize,
}

/// Marginal likelihood terms and, on request, the posterior of the weights.
#[derive(Clone, Debug)]
pub struct Marginal {
    pub log_evidence: f64,
    pub logdet: f64,
    pub quad: f64,
    /// Posterior mean over the requested columns.
    pub mean: Option<DVector<f64>>,
    /// Posterior covariance over the requested columns.
    pub cov: Option<DMatrix<f64>>,
}

impl GaussianModel {
    pub fn new(problem: &GroupedRegressionProblem) -> Self {
        let blocks = problem
            .row_blocks
            .iter()
            .map(|r| {
                let a = problem.a.rows_range(r.clone());
                let y = problem.y.rows_range(r.clone());
                BlockStats {
                    gram: a.transpose() * a,
                    aty: a.transpose() * y,
                    yty: y.norm_squared(),
                    rows: r.len(),
                }
            })
            .collect();
        GaussianModel {
            blocks,
            columns: problem.columns(),
        }
    }

    pub fn total_rows(&self) -> usize {
        self.blocks.iter().map(|b| b.rows).sum()
    }

    /// Terms of `log N(y; 0, Sigma + A_S Gamma_S A_S^T)` for the columns in
    /// `cols` with prior variances `var` (same length, nonnegative).
    pub fn marginal(
        &self,
        cols: &[usize],
        var: &[f64],
        sigma2: &[f64],
        posterior: bool,
    ) -> Result<Marginal> {
        debug_assert_eq!(cols.len(), var.len());
        debug_assert_eq!(sigma2.len(), self.blocks.len());
        let k = cols.len();
        let mut h = DMatrix::<f64>::zeros(k, k);
        let mut b = DVector::<f64>::zeros(k);
        let mut logdet = 0.0;
        let mut quad = 0.0;
        for (blk, &s2) in self.blocks.iter().zip(sigma2) {
            let w = 1.0 / s2;
            for (r, &cr) in cols.iter().enumerate() {
                b[r] += w * blk.aty[cr];
                for (c, &cc) in cols.iter().enumerate().skip(r) {
                    h[(r, c)] += w * blk.gram[(cr, cc)];
                }
            }
            logdet += blk.rows as f64 * s2.ln();
            quad += w * blk.yty;
        }
        let d = DVector::from_iterator(k, var.iter().map(|v| v.sqrt()));
        let mut bm = DMatrix::<f64>::identity(k, k);
        for r in 0..k {
            for c in r..k {
                let v = d[r] * h[(r, c)] * d[c];
                bm[(r, c)] += v;
                if c != r {
                    bm[(c, r)] = v;
                }
            }
        }
        let chol = factor(bm, "I + G^1/2 A^T S^-1 A G^1/2")?;
        logdet += 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let dh = d.component_mul(&b);
        let v = chol.solve(&dh);
        quad -= dh.dot(&v);
        let n = self.total_rows() as f64;
        let log_evidence = -0.5 * (n * LOG_2PI + logdet + quad);
        let (mean, cov) = if posterior {
            let mean = d.component_mul(&v);
            let mut cov = chol.inverse();
            for r in 0..k {
                for c in 0..k {
                    cov[(r, c)] *= d[r] * d[c];
                }
            }
            (Some(mean), Some(cov))
        } else {
            (None, None)
        };
        Ok(Marginal {
            log_evidence,
            logdet,
            quad,
            mean,
            cov,
        })
    }
}

fn factor(m: DMatrix<f64>, context: &str) -> Result<Cholesky<f64, Dyn>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(context.to_string()));
    }
    let condition = diag_ratio(&m);
    Cholesky::new(m).ok_or_else(|| Error::NotPositiveDefinite {
        context: context.to_string(),
        condition,
    })
}

/// Cheap conditioning indicator: ratio of extreme diagonal entries.
fn diag_ratio(m: &DMatrix<f64>) -> f64 {
    let d = m.diagonal();
    let max = d.iter().copied().fold(f64::MIN, f64::max);
    let min = d.iter().copied().fold(f64::MAX, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}
