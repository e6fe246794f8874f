//! Per-output ARX regression problems and their multi-experiment stacking.
//!
//! For output `i` the regressor at time `t` is
//! `[-y_i(t-1..n_a), y_j(t-1..n_ij) for j != i, u_k(t-1..n_ik)]` with the
//! `y_i` block placed at position `i` among the output blocks. Parameters of
//! one block form a *small group*; the same block across `L` experiments forms
//! a *large group*. Columns of large group `k` are contiguous and ordered by
//! experiment.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One experiment: `y` is `N x p`, `u` is `N x m`, rows are samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentData {
    pub y: DMatrix<f64>,
    pub u: DMatrix<f64>,
    pub sample_period: f64,
}

impl ExperimentData {
    pub fn new(y: DMatrix<f64>, u: DMatrix<f64>, sample_period: f64) -> Result<Self> {
        let d = ExperimentData { y, u, sample_period };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.y.nrows() != self.u.nrows() {
            return Err(Error::Dimension(format!(
                "y has {} rows, u has {}",
                self.y.nrows(),
                self.u.nrows()
            )));
        }
        if self.y.nrows() == 0 {
            return Err(Error::InvalidArgument("experiment has no samples".into()));
        }
        if self.y.iter().chain(self.u.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("experiment data".into()));
        }
        Ok(())
    }

    pub fn samples(&self) -> usize {
        self.y.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.y.ncols()
    }

    pub fn inputs(&self) -> usize {
        self.u.ncols()
    }

    /// First `n` samples.
    pub fn truncated(&self, n: usize) -> ExperimentData {
        let n = n.min(self.samples());
        ExperimentData {
            y: self.y.rows(0, n).into_owned(),
            u: self.u.rows(0, n).into_owned(),
            sample_period: self.sample_period,
        }
    }
}

/// Lag orders of the regression for one output.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupOrders {
    pub output: usize,
    pub na: usize,
    /// Length `p`; entry `output` is ignored in favour of `na`.
    pub nby: Vec<usize>,
    pub nbu: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nc: Option<usize>,
}

impl GroupOrders {
    pub fn uniform(output: usize, p: usize, m: usize, order: usize) -> Self {
        GroupOrders {
            output,
            na: order,
            nby: vec![order; p],
            nbu: vec![order; m],
            nc: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.output >= self.nby.len() {
            return Err(Error::IndexOutOfRange {
                index: self.output,
                len: self.nby.len(),
            });
        }
        if self.rho().contains(&0) {
            return Err(Error::InvalidArgument("all orders must be at least 1".into()));
        }
        Ok(())
    }

    /// Block sizes `rho`, one per group (`M = p + m`, plus one for ARMAX).
    pub fn rho(&self) -> Vec<usize> {
        let mut rho: Vec<usize> = self
            .nby
            .iter()
            .enumerate()
            .map(|(j, &n)| if j == self.output { self.na } else { n })
            .collect();
        rho.extend(&self.nbu);
        rho.extend(self.nc);
        rho
    }

    pub fn groups(&self) -> usize {
        self.rho().len()
    }

    pub fn max_lag(&self) -> usize {
        self.rho().into_iter().max().unwrap_or(0)
    }
}

/// Single-experiment regression `y = A theta + e`.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressionBlock {
    pub a: DMatrix<f64>,
    pub y: DVector<f64>,
    pub rho: Vec<usize>,
    pub output: usize,
}

/// Build the regressors of one output from one experiment. Rows correspond
/// to `t = maxlag+1 ..= N` (1-based).
pub fn build_regressors(data: &ExperimentData, orders: &GroupOrders) -> Result<RegressionBlock> {
    data.validate()?;
    orders.validate()?;
    if orders.nc.is_some() {
        return Err(Error::ArmaxUnsupported);
    }
    let (p, m) = (data.outputs(), data.inputs());
    if orders.nby.len() != p || orders.nbu.len() != m {
        return Err(Error::Dimension(format!(
            "orders are for p={}, m={} but data has p={p}, m={m}",
            orders.nby.len(),
            orders.nbu.len()
        )));
    }
    let n = data.samples();
    let lag = orders.max_lag();
    if n <= lag {
        return Err(Error::InsufficientSamples {
            samples: n,
            max_lag: lag,
        });
    }
    let rho = orders.rho();
    let cols: usize = rho.iter().sum();
    let i = orders.output;
    let rows = n - lag;
    let mut a = DMatrix::zeros(rows, cols);
    for r in 0..rows {
        let t = r + lag;
        let mut c = 0;
        for (g, &order) in rho.iter().enumerate() {
            for d in 1..=order {
                a[(r, c)] = if g < p {
                    let v = data.y[(t - d, g)];
                    if g == i {
                        -v
                    } else {
                        v
                    }
                } else {
                    data.u[(t - d, g - p)]
                };
                c += 1;
            }
        }
    }
    let y = DVector::from_iterator(rows, (lag..n).map(|t| data.y[(t, i)]));
    Ok(RegressionBlock {
        a,
        y,
        rho,
        output: i,
    })
}

/// Stacked grouped regression problem.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupedRegressionProblem {
    pub a: DMatrix<f64>,
    pub y: DVector<f64>,
    pub rho: Vec<usize>,
    /// Number of parameter copies per group (`L` for heterogeneous stacking,
    /// 1 for homogeneous stacking).
    pub replicas: usize,
    pub output: usize,
    /// Row range of each experiment.
    pub row_blocks: Vec<Range<usize>>,
}

impl GroupedRegressionProblem {
    pub fn groups(&self) -> usize {
        self.rho.len()
    }

    pub fn columns(&self) -> usize {
        self.a.ncols()
    }

    pub fn experiments(&self) -> usize {
        self.row_blocks.len()
    }

    /// `rho^S = L rho`, the sizes of the large groups.
    pub fn rho_large(&self) -> Vec<usize> {
        self.rho.iter().map(|r| r * self.replicas).collect()
    }

    /// `rho^E`, the sizes of the small groups in column order.
    pub fn rho_small(&self) -> Vec<usize> {
        self.rho
            .iter()
            .flat_map(|&r| std::iter::repeat_n(r, self.replicas))
            .collect()
    }

    /// Columns of large group `k` (0-based).
    pub fn group_range(&self, k: usize) -> Range<usize> {
        let start: usize = self.rho[..k].iter().sum::<usize>() * self.replicas;
        start..start + self.rho[k] * self.replicas
    }

    /// Columns of the experiment-`l` block of large group `k` (0-based).
    pub fn small_group_range(&self, k: usize, l: usize) -> Range<usize> {
        let g = self.group_range(k);
        let start = g.start + l * self.rho[k];
        start..start + self.rho[k]
    }

    /// `||w_k||_2` for every large group.
    pub fn group_norms(&self, w: &DVector<f64>) -> Result<Vec<f64>> {
        group_norms(w, self)
    }

    /// Noise-block index of each row.
    pub fn row_experiment(&self) -> Vec<usize> {
        let mut out = vec![0; self.a.nrows()];
        for (l, r) in self.row_blocks.iter().enumerate() {
            out[r.clone()].fill(l);
        }
        out
    }
}

/// `||w_k||_2` for each large group of `problem`.
pub fn group_norms(w: &DVector<f64>, problem: &GroupedRegressionProblem) -> Result<Vec<f64>> {
    if w.len() != problem.columns() {
        return Err(Error::Dimension(format!(
            "weight length {} != column count {}",
            w.len(),
            problem.columns()
        )));
    }
    Ok((0..problem.groups())
        .map(|k| w.rows_range(problem.group_range(k)).norm())
        .collect())
}

fn check_compatible(blocks: &[RegressionBlock]) -> Result<()> {
    let first = blocks
        .first()
        .ok_or_else(|| Error::InvalidArgument("no experiments to stack".into()))?;
    for b in blocks {
        if b.rho != first.rho || b.output != first.output {
            return Err(Error::InvalidArgument(
                "experiments must share output index and orders".into(),
            ));
        }
    }
    Ok(())
}

/// Heterogeneous stacking: each experiment keeps its own parameters, placed
/// block-diagonally inside every large group.
pub fn stack_experiments(blocks: &[RegressionBlock]) -> Result<GroupedRegressionProblem> {
    check_compatible(blocks)?;
    let rho = blocks[0].rho.clone();
    let l_count = blocks.len();
    let rows: usize = blocks.iter().map(|b| b.a.nrows()).sum();
    let cols = l_count * rho.iter().sum::<usize>();
    let mut a = DMatrix::zeros(rows, cols);
    let mut y = DVector::zeros(rows);
    let mut row_blocks = Vec::with_capacity(l_count);
    let mut r0 = 0;
    for (l, b) in blocks.iter().enumerate() {
        let nr = b.a.nrows();
        let mut src = 0;
        let mut dst = 0;
        for &rk in &rho {
            a.view_mut((r0, dst + l * rk), (nr, rk))
                .copy_from(&b.a.columns(src, rk));
            src += rk;
            dst += l_count * rk;
        }
        y.rows_mut(r0, nr).copy_from(&b.y);
        row_blocks.push(r0..r0 + nr);
        r0 += nr;
    }
    Ok(GroupedRegressionProblem {
        a,
        y,
        rho,
        replicas: l_count,
        output: blocks[0].output,
        row_blocks,
    })
}

/// Homogeneous stacking: one shared parameter vector, rows concatenated.
pub fn stack_homogeneous(blocks: &[RegressionBlock]) -> Result<GroupedRegressionProblem> {
    check_compatible(blocks)?;
    let rows: usize = blocks.iter().map(|b| b.a.nrows()).sum();
    let cols = blocks[0].a.ncols();
    let mut a = DMatrix::zeros(rows, cols);
    let mut y = DVector::zeros(rows);
    let mut row_blocks = Vec::with_capacity(blocks.len());
    let mut r0 = 0;
    for b in blocks {
        let nr = b.a.nrows();
        a.rows_mut(r0, nr).copy_from(&b.a);
        y.rows_mut(r0, nr).copy_from(&b.y);
        row_blocks.push(r0..r0 + nr);
        r0 += nr;
    }
    Ok(GroupedRegressionProblem {
        a,
        y,
        rho: blocks[0].rho.clone(),
        replicas: 1,
        output: blocks[0].output,
        row_blocks,
    })
}

/// Build and stack the problem for one output across all experiments.
pub fn build_problem(
    data: &[ExperimentData],
    orders: &GroupOrders,
    heterogeneous: bool,
) -> Result<GroupedRegressionProblem> {
    let blocks = data
        .iter()
        .map(|d| build_regressors(d, orders))
        .collect::<Result<Vec<_>>>()?;
    if heterogeneous {
        stack_experiments(&blocks)
    } else {
        stack_homogeneous(&blocks)
    }
}

/// Group selector for [`block_columns`], 0-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GroupIndex {
    /// Small group `k^E`: experiment `k^E mod L` of large group `k^E / L`.
    Small(usize),
    /// Large group `k^S`.
    Large(usize),
}

/// Column range of a small or large group, from the closed-form index
/// formulas (ceiling/modulo arithmetic on the 1-based index).
pub fn block_columns(index: GroupIndex, rho: &[usize], l_count: usize) -> Result<Range<usize>> {
    if l_count == 0 {
        return Err(Error::InvalidArgument("experiment count must be positive".into()));
    }
    match index {
        GroupIndex::Small(k0) => {
            let len = l_count * rho.len();
            if k0 >= len {
                return Err(Error::IndexOutOfRange { index: k0, len });
            }
            let ke = k0 + 1;
            let k = ke.div_ceil(l_count);
            let offset = l_count * rho[..k - 1].iter().sum::<usize>();
            let pos = (ke - 1) % l_count;
            let first = offset + pos * rho[k - 1] + 1;
            let last = offset + (pos + 1) * rho[k - 1];
            Ok(first - 1..last)
        }
        GroupIndex::Large(k0) => {
            if k0 >= rho.len() {
                return Err(Error::IndexOutOfRange {
                    index: k0,
                    len: rho.len(),
                });
            }
            let offset = l_count * rho[..k0].iter().sum::<usize>();
            Ok(offset..offset + l_count * rho[k0])
        }
    }
}

/// Per-column scale factors from unit-norm column normalization.
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnScaling {
    pub scales: DVector<f64>,
}

impl ColumnScaling {
    /// Divide each nonzero column of `problem.a` by its norm.
    pub fn normalize(problem: &mut GroupedRegressionProblem) -> Self {
        let scales = DVector::from_iterator(
            problem.columns(),
            problem.a.column_iter().map(|c| {
                let n = c.norm();
                if n > 0.0 {
                    n
                } else {
                    1.0
                }
            }),
        );
        for (mut col, s) in problem.a.column_iter_mut().zip(scales.iter()) {
            col /= *s;
        }
        ColumnScaling { scales }
    }

    /// Map weights of the normalized problem back to the original columns.
    pub fn unscale(&self, w: &DVector<f64>) -> DVector<f64> {
        w.component_div(&self.scales)
    }
}
