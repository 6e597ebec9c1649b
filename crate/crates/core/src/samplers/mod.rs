//! Query-selection strategies.

mod rgucb;
mod scoring;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use rgucb::{hoeffding_interval, inject_pseudo_samples, ConfidenceInterval, IntervalBelief, RgUcb, Selection};
pub use scoring::{
    alpha_ig_scores, alpha_ig_select, alpha_wass_scores, alpha_wass_select, argmax_lowest, argmin_lowest,
    current_rank_set, ScoreConfig,
};

use crate::belief::GaussianBelief;
use crate::error::{Error, Result};
use crate::estimators::EntropyEstimator;
use crate::par::Execution;
use crate::payoff::{EntryLayout, PayoffMatrix};
use crate::rank_belief::{sample_ranks_from, GaussianDistribution, RankSampleSet};
use crate::rng::{derive_seed, label, substream};

pub const DEFAULT_N_C: u32 = 100;

fn default_estimator() -> EntropyEstimator {
    EntropyEstimator::Binning
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SamplerSpec {
    AlphaIg {
        n_e: usize,
        n_b: usize,
        #[serde(default = "default_estimator")]
        estimator: EntropyEstimator,
        /// Alphabet size for NSB; defaults to the rank-count bound.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        atom_bound: Option<f64>,
    },
    AlphaWass {
        n_e: usize,
        n_b: usize,
    },
    PayoffIg,
    Uniform,
    RgUcb {
        delta: f64,
        /// Expand each binary outcome with the good/bad block structure.
        #[serde(default)]
        pseudo_samples: bool,
    },
}

impl SamplerSpec {
    pub fn uses_belief(&self) -> bool {
        !matches!(self, SamplerSpec::RgUcb { .. })
    }
}

/// Settings that do not depend on the strategy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplerParams {
    pub n_c: u32,
    pub epsilon: f64,
    pub bounds: (f64, f64),
    pub seed: u64,
    pub mode: Execution,
    /// Good-block size, needed for pseudo-sample injection.
    pub n_good: Option<usize>,
}

/// Everything a sampler knows after some number of real observations.
#[derive(Clone, Debug)]
pub struct SamplerState {
    spec: SamplerSpec,
    params: SamplerParams,
    layout: EntryLayout,
    counts: Vec<u64>,
    belief: Option<GaussianBelief>,
    rg: Option<RgUcb>,
}

impl SamplerState {
    /// `belief` is the prior; required for every strategy except RG-UCB.
    pub fn new(spec: SamplerSpec, belief: Option<GaussianBelief>, size: usize, params: SamplerParams) -> Result<Self> {
        if spec.uses_belief() {
            match &belief {
                None => return Err(Error::invalid("this sampler needs a payoff belief")),
                Some(b) if b.size() != size => return Err(Error::shape(size, b.size())),
                _ => {}
            }
        }
        if params.n_c == 0 {
            return Err(Error::invalid("N_c must be at least 1"));
        }
        let rg = match spec {
            SamplerSpec::RgUcb { delta, pseudo_samples } => {
                if pseudo_samples && params.n_good.is_none() {
                    return Err(Error::invalid("pseudo-samples need a good/bad block structure"));
                }
                Some(RgUcb::new(size, delta, params.bounds)?)
            }
            SamplerSpec::AlphaIg { n_e, n_b, .. } | SamplerSpec::AlphaWass { n_e, n_b } if n_e == 0 || n_b == 0 => {
                return Err(Error::invalid("N_e and N_b must be at least 1"));
            }
            _ => None,
        };
        let layout = EntryLayout::new(size);
        Ok(SamplerState {
            spec,
            params,
            layout,
            counts: vec![0; layout.entry_count()],
            belief: if rg.is_some() { None } else { belief },
            rg,
        })
    }

    pub fn spec(&self) -> &SamplerSpec {
        &self.spec
    }

    pub fn size(&self) -> usize {
        (self.layout.entry_count() as f64).sqrt() as usize
    }

    pub fn layout(&self) -> EntryLayout {
        self.layout
    }

    /// Real observations per entry.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn belief(&self) -> Option<&GaussianBelief> {
        self.belief.as_ref()
    }

    pub fn rg_ucb(&self) -> Option<&RgUcb> {
        self.rg.as_ref()
    }

    fn score_config(&self, n_e: usize, n_b: usize) -> ScoreConfig {
        ScoreConfig {
            n_e,
            n_b,
            n_c: self.params.n_c,
            epsilon: self.params.epsilon,
            mode: self.params.mode,
        }
    }

    fn belief_ref(&self) -> Result<&GaussianBelief> {
        self.belief.as_ref().ok_or_else(|| Error::invalid("sampler has no payoff belief"))
    }

    /// Choose the entry to query in round `round`.
    pub fn select(&self, round: u64) -> Result<Selection> {
        let seed = derive_seed(self.params.seed, &[label::SELECT, round]);
        let entry = match &self.spec {
            SamplerSpec::AlphaIg {
                n_e,
                n_b,
                estimator,
                atom_bound,
            } => alpha_ig_select(self.belief_ref()?, &self.score_config(*n_e, *n_b), *estimator, *atom_bound, seed)?,
            SamplerSpec::AlphaWass { n_e, n_b } => alpha_wass_select(self.belief_ref()?, &self.score_config(*n_e, *n_b), seed)?,
            SamplerSpec::PayoffIg => self.payoff_ig_select()?,
            SamplerSpec::Uniform => uniform_select(self.layout.entry_count(), seed),
            SamplerSpec::RgUcb { .. } => return Ok(self.rg.as_ref().expect("rg state").step()),
        };
        Ok(Selection::Entry(entry))
    }

    /// Least-observed entry under an independent prior, otherwise the entry
    /// with the largest predictive variance.
    pub fn payoff_ig_select(&self) -> Result<usize> {
        let b = self.belief_ref()?;
        let pick = if b.is_diagonal() {
            let c: Vec<f64> = self.counts.iter().map(|&c| c as f64).collect();
            argmin_lowest(&c)
        } else {
            let v: Vec<f64> = (0..b.entry_count()).map(|e| b.predictive_variance(e)).collect();
            argmax_lowest(&v)
        };
        pick.ok_or_else(|| Error::invalid("no entries"))
    }

    /// Commit one real observation.
    pub fn record(&mut self, entry: usize, observation: f64) -> Result<()> {
        if entry >= self.counts.len() {
            return Err(Error::invalid(format!("entry {entry} out of range")));
        }
        if !observation.is_finite() {
            return Err(Error::invalid("observation is not finite"));
        }
        self.counts[entry] += 1;
        if let Some(b) = &self.belief {
            self.belief = Some(b.condition(entry, observation)?);
        }
        if let Some(rg) = &mut self.rg {
            rg.add(entry, observation);
            if let SamplerSpec::RgUcb { pseudo_samples: true, .. } = self.spec {
                let n_good = self.params.n_good.expect("checked at construction");
                for (e, v) in inject_pseudo_samples(self.layout, n_good, entry, observation)? {
                    rg.add(e, v);
                }
            }
        }
        Ok(())
    }

    /// Point estimate of the payoffs: posterior mean or empirical means.
    pub fn mean_payoffs(&self) -> Result<PayoffMatrix> {
        match (&self.belief, &self.rg) {
            (Some(b), _) => Ok(b.posterior_mean()),
            (None, Some(rg)) => PayoffMatrix::new(self.size(), rg.mean_values()),
            _ => Err(Error::invalid("sampler has no payoff model")),
        }
    }

    /// Rank samples from the current payoff model.
    pub fn rank_samples(&self, n: usize, seed: u64) -> Result<RankSampleSet> {
        let (eps, mode) = (self.params.epsilon, self.params.mode);
        match (&self.belief, &self.rg) {
            (Some(b), _) => sample_ranks_from(&GaussianDistribution::new(b)?, n, eps, seed, mode),
            (None, Some(rg)) => sample_ranks_from(&rg.interval_belief(), n, eps, seed, mode),
            _ => Err(Error::invalid("sampler has no payoff model")),
        }
    }
}

/// Uniformly random entry.
pub fn uniform_select(entry_count: usize, seed: u64) -> usize {
    substream(seed, &[]).gen_range(0..entry_count.max(1))
}
