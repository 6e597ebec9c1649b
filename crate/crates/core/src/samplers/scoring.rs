use crate::belief::GaussianBelief;
use crate::error::{Error, Result};
use crate::estimators::{entropy_binning, entropy_nsb, rank_count_upper_bound, wasserstein_tv, EntropyEstimator};
use crate::par::{self, Execution};
use crate::rank_belief::{sample_ranks, RankSampleSet};
use crate::rng::{derive_seed, label, substream};

/// Hallucination-loop settings shared by the rank-belief objectives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoreConfig {
    pub n_e: usize,
    pub n_b: usize,
    pub n_c: u32,
    pub epsilon: f64,
    pub mode: Execution,
}

impl ScoreConfig {
    fn validate(&self) -> Result<()> {
        if self.n_e == 0 || self.n_b == 0 || self.n_c == 0 {
            return Err(Error::invalid("N_e, N_b and N_c must be at least 1"));
        }
        Ok(())
    }
}

/// Posterior after hallucinating one observation of `entry`, repeated `n_c` times.
fn hallucinated_ranks(belief: &GaussianBelief, cfg: &ScoreConfig, seed: u64, entry: usize, repeat: usize) -> Result<RankSampleSet> {
    let path = [entry as u64, repeat as u64];
    let mut rng = substream(seed, &[label::HALLUCINATE, path[0], path[1]]);
    let obs = belief.hallucinate_observation(entry, &mut rng)?;
    let post = belief.condition_repeated(entry, obs, cfg.n_c)?;
    sample_ranks(&post, cfg.n_b, cfg.epsilon, derive_seed(seed, &[label::RANKS, path[0], path[1]]), Execution::Sequential)
}

/// Run `f` on every `(entry, repeat)` pair and average per entry.
fn averaged<F>(belief: &GaussianBelief, cfg: &ScoreConfig, f: F) -> Result<Vec<f64>>
where
    F: Fn(usize, usize) -> Result<f64> + Sync,
{
    cfg.validate()?;
    let n = belief.entry_count();
    let values = par::try_map_indexed(cfg.mode, n * cfg.n_e, |job| f(job / cfg.n_e, job % cfg.n_e))?;
    Ok(values.chunks(cfg.n_e).map(|c| c.iter().sum::<f64>() / cfg.n_e as f64).collect())
}

/// Expected entropy of the rank belief after observing each entry (lower is better).
pub fn alpha_ig_scores(
    belief: &GaussianBelief,
    cfg: &ScoreConfig,
    estimator: EntropyEstimator,
    atom_bound: Option<f64>,
    seed: u64,
) -> Result<Vec<f64>> {
    let bound = match (estimator, atom_bound) {
        (EntropyEstimator::Nsb, None) => Some(rank_count_upper_bound(1, belief.size() as u64)?.as_f64()),
        (_, b) => b,
    };
    averaged(belief, cfg, |entry, repeat| {
        let set = hallucinated_ranks(belief, cfg, seed, entry, repeat)?;
        match estimator {
            EntropyEstimator::Binning => Ok(entropy_binning(&set).value),
            EntropyEstimator::Nsb => match entropy_nsb(&set, bound.unwrap_or(f64::INFINITY)) {
                Ok(e) => Ok(e.value),
                Err(Error::Quadrature { fallback }) => Ok(fallback),
                Err(e) => Err(e),
            },
        }
    })
}

/// The rank samples the Wasserstein objective compares against.
pub fn current_rank_set(belief: &GaussianBelief, cfg: &ScoreConfig, seed: u64) -> Result<RankSampleSet> {
    cfg.validate()?;
    sample_ranks(belief, cfg.n_b, cfg.epsilon, derive_seed(seed, &[label::CURRENT]), cfg.mode)
}

/// Expected Wasserstein distance between the current and hallucinated rank beliefs (higher is better).
pub fn alpha_wass_scores(belief: &GaussianBelief, cfg: &ScoreConfig, seed: u64) -> Result<Vec<f64>> {
    let current = current_rank_set(belief, cfg, seed)?;
    averaged(belief, cfg, |entry, repeat| {
        let set = hallucinated_ranks(belief, cfg, seed, entry, repeat)?;
        wasserstein_tv(&current, &set)
    })
}

/// Index of the smallest score; ties go to the lowest index.
pub fn argmin_lowest(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        if s.is_nan() {
            continue;
        }
        if best.is_none_or(|b| s < scores[b]) {
            best = Some(i);
        }
    }
    best
}

/// Index of the largest score; ties go to the lowest index.
pub fn argmax_lowest(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        if s.is_nan() {
            continue;
        }
        if best.is_none_or(|b| s > scores[b]) {
            best = Some(i);
        }
    }
    best
}

pub fn alpha_ig_select(
    belief: &GaussianBelief,
    cfg: &ScoreConfig,
    estimator: EntropyEstimator,
    atom_bound: Option<f64>,
    seed: u64,
) -> Result<usize> {
    let scores = alpha_ig_scores(belief, cfg, estimator, atom_bound, seed)?;
    argmin_lowest(&scores).ok_or_else(|| Error::invalid("all αIG scores are NaN"))
}

pub fn alpha_wass_select(belief: &GaussianBelief, cfg: &ScoreConfig, seed: u64) -> Result<usize> {
    let scores = alpha_wass_scores(belief, cfg, seed)?;
    argmax_lowest(&scores).ok_or_else(|| Error::invalid("all αWass scores are NaN"))
}
