use crate::alpharank::{alpha_rank, l1, AlphaRank};
use crate::error::{Error, Result};
use crate::payoff::PayoffMatrix;
use crate::rank_belief::RankSampleSet;

/// L1 radius within which two α-ranks count as equal.
pub const RANK_TOLERANCE: f64 = 0.01;

/// 0 when the α-rank of the mean payoffs matches `r_gt`, else 1.
pub fn regret_jm(mean: &PayoffMatrix, r_gt: &AlphaRank, epsilon: f64) -> Result<f64> {
    if mean.size() != r_gt.len() {
        return Err(Error::shape(r_gt.len(), mean.size()));
    }
    let r = alpha_rank(mean, epsilon)?;
    Ok(if r.l1_distance(r_gt.probabilities()) < RANK_TOLERANCE { 0.0 } else { 1.0 })
}

/// Fraction of samples whose rounded vector lies within the tolerance of `target`.
fn neighbourhood_mass(set: &RankSampleSet, target: &[f64]) -> f64 {
    let p = set.precision();
    let hits: usize = set
        .aggregate(p)
        .iter()
        .filter(|a| l1(&a.rounded(p), target) < RANK_TOLERANCE)
        .map(|a| a.count)
        .sum();
    hits as f64 / set.len() as f64
}

/// `1 − P(r_gt)` under the sampled rank belief.
pub fn regret_jf(set: &RankSampleSet, r_gt: &AlphaRank) -> Result<f64> {
    if set.dim() != r_gt.len() {
        return Err(Error::shape(r_gt.len(), set.dim()));
    }
    Ok(1.0 - neighbourhood_mass(set, r_gt.probabilities()))
}

/// `1 − P(r*)` with `r*` the most frequent rounded α-rank.
pub fn regret_jb(set: &RankSampleSet) -> f64 {
    let p = set.precision();
    let atoms = set.aggregate(p);
    let mode = atoms
        .iter()
        .fold(None, |best: Option<&crate::rank_belief::Atom>, a| match best {
            Some(b) if b.count >= a.count => Some(b),
            _ => Some(a),
        })
        .expect("rank sample set is never empty");
    1.0 - neighbourhood_mass(set, &mode.rounded(p))
}
