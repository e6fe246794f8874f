//! Precision and true-positive rate of a reconstructed structure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::BooleanNetwork;

/// Confusion counts over the off-diagonal `y -> y` arcs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StructureMetrics {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
    /// `TP / (TP + FP)`; 1 when nothing is predicted and the truth is empty,
    /// 0 when nothing is predicted otherwise.
    pub precision: f64,
    /// `TP / (TP + FN)`; 1 when the truth is empty.
    pub tpr: f64,
    /// `FP / (FP + TN)`.
    pub fpr: f64,
    /// Set when `TP + FP = 0`.
    pub precision_degenerate: bool,
}

impl StructureMetrics {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        let degenerate = tp + fp == 0;
        let precision = if degenerate {
            if fn_ == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            tp as f64 / (tp + fp) as f64
        };
        let tpr = if tp + fn_ == 0 { 1.0 } else { tp as f64 / (tp + fn_) as f64 };
        let fpr = if fp + tn == 0 { 0.0 } else { fp as f64 / (fp + tn) as f64 };
        StructureMetrics {
            tp,
            fp,
            fn_,
            tn,
            precision,
            tpr,
            fpr,
            precision_degenerate: degenerate,
        }
    }
}

/// Compare the `y -> y` arcs of `estimate` against `truth`.
pub fn compare(truth: &BooleanNetwork, estimate: &BooleanNetwork) -> Result<StructureMetrics> {
    if truth.p != estimate.p {
        return Err(Error::Dimension(format!(
            "truth has {} nodes, estimate has {}",
            truth.p, estimate.p
        )));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for from in 0..truth.p {
        for to in 0..truth.p {
            if from == to {
                continue;
            }
            match (truth.has_yy(from, to), estimate.has_yy(from, to)) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                (false, false) => tn += 1,
            }
        }
    }
    Ok(StructureMetrics::from_counts(tp, fp, fn_, tn))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net(p: usize, arcs: &[(usize, usize)]) -> BooleanNetwork {
        let mut n = BooleanNetwork::new(p, 0);
        for &(f, t) in arcs {
            n.add_yy(f, t).unwrap();
        }
        n
    }

    #[test]
    fn counts() {
        let truth = net(3, &[(0, 1), (1, 2)]);
        let est = net(3, &[(0, 1), (2, 0)]);
        let m = compare(&truth, &est).unwrap();
        assert_eq!((m.tp, m.fp, m.fn_, m.tn), (1, 1, 1, 3));
        assert_eq!(m.precision, 0.5);
        assert_eq!(m.tpr, 0.5);
        assert_eq!(m.fpr, 0.25);
    }

    #[test]
    fn empty_prediction() {
        let truth = net(3, &[(0, 1)]);
        let m = compare(&truth, &net(3, &[])).unwrap();
        assert!(m.precision_degenerate);
        assert_eq!(m.precision, 0.0);
        let m = compare(&net(3, &[]), &net(3, &[])).unwrap();
        assert_eq!(m.precision, 1.0);
        assert_eq!(m.tpr, 1.0);
    }
}
