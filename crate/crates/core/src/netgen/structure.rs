//! Random sparse network structures with a forward chain and a few nested or
//! disjoint feedback loops.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::network::BooleanNetwork;

/// Feedback arc `y_to <- y_from` (with `to < from`) closing the loop over
/// nodes `to..=from`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FeedbackArc {
    pub to: usize,
    pub from: usize,
}

impl FeedbackArc {
    fn nested_or_disjoint(&self, other: &FeedbackArc) -> bool {
        let disjoint = self.from < other.to || other.from < self.to;
        let inside = |a: &FeedbackArc, b: &FeedbackArc| b.to <= a.to && a.from <= b.from;
        disjoint || inside(self, other) || inside(other, self)
    }
}

/// Feedback arcs of a structure, ordered inner loops first.
pub fn feedback_arcs(net: &BooleanNetwork) -> Vec<FeedbackArc> {
    let mut arcs: Vec<FeedbackArc> = net
        .yy
        .iter()
        .filter(|(from, to)| to < from)
        .map(|&(from, to)| FeedbackArc { to, from })
        .collect();
    arcs.sort_by_key(|a| (a.from - a.to, a.to));
    arcs
}

/// Arc count `floor(density p^2)`.
pub fn arc_count(p: usize, density: f64) -> usize {
    (density * (p * p) as f64 + 1e-9).floor() as usize
}

/// Random structure: chain `y_1 -> y_2 -> ... -> y_p`, between one and
/// `max_feedback` feedback arcs whose loops are pairwise nested or disjoint,
/// and the remaining arcs drawn among the strictly lower-triangular
/// (feedforward) positions.
pub fn random_boolean_structure<R: Rng + ?Sized>(
    p: usize,
    density: f64,
    max_feedback: usize,
    rng: &mut R,
) -> Result<BooleanNetwork> {
    if !(density > 0.0 && density < 1.0) {
        return Err(Error::InfeasibleStructure(format!("density {density} not in (0, 1)")));
    }
    let total = arc_count(p, density);
    let chain = p.saturating_sub(1);
    let min_fb = usize::from(max_feedback > 0 && p >= 2);
    if total < chain + min_fb {
        return Err(Error::InfeasibleStructure(format!(
            "{total} arcs cannot hold the {chain}-arc chain and feedback"
        )));
    }
    let lower_free = p * p.saturating_sub(1) / 2 - chain;
    if total - chain > lower_free + max_feedback {
        return Err(Error::InfeasibleStructure(format!(
            "{total} arcs exceed the available positions"
        )));
    }

    let mut net = BooleanNetwork::new(p, 0);
    for k in 1..p {
        net.add_yy(k - 1, k)?;
    }

    // feedback arcs first; retry the draw if the loop family gets stuck
    let lo = min_fb.max((total - chain).saturating_sub(lower_free));
    let hi = max_feedback.min(total - chain);
    let want = if hi >= lo { rng.random_range(lo..=hi) } else { lo };
    let mut fb: Vec<FeedbackArc> = Vec::new();
    for _ in 0..1000 {
        if fb.len() == want {
            break;
        }
        let a = rng.random_range(0..p);
        let b = rng.random_range(0..p);
        if a == b {
            continue;
        }
        let cand = FeedbackArc {
            to: a.min(b),
            from: a.max(b),
        };
        if fb.iter().all(|f| *f != cand && f.nested_or_disjoint(&cand)) {
            fb.push(cand);
        }
    }
    if fb.len() < want {
        return Err(Error::InfeasibleStructure(format!(
            "could not place {want} nested or disjoint feedback loops on {p} nodes"
        )));
    }
    for f in &fb {
        net.add_yy(f.from, f.to)?;
    }

    let mut slots: Vec<(usize, usize)> = (0..p)
        .flat_map(|from| (from + 2..p).map(move |to| (from, to)))
        .collect();
    slots.shuffle(rng);
    for &(from, to) in slots.iter().take(total - chain - fb.len()) {
        net.add_yy(from, to)?;
    }
    debug_assert_eq!(net.yy_count(), total);
    Ok(net)
}
