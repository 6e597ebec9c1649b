use std::fmt::Write as _;

use super::config::ExperimentConfig;
use super::runner::setup;
use crate::error::{Error, Result};
use crate::estimators::{entropy_binning, EntropyEstimator};
use crate::games::good_bad_groups;
use crate::rng::{label, substream};
use crate::samplers::{alpha_ig_scores, alpha_wass_scores, current_rank_set, SamplerSpec, ScoreConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct InspectOptions {
    /// Real observations of every entry before scoring.
    pub burn_in: u64,
    /// Additional `(entry, count)` observations after the burn-in.
    pub extra: Vec<(usize, u64)>,
}

impl Default for InspectOptions {
    fn default() -> Self {
        InspectOptions {
            burn_in: 5,
            extra: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntrySnapshot {
    pub entry: usize,
    pub row: usize,
    pub col: usize,
    pub count: u64,
    pub group: String,
    pub alpha_ig: f64,
    pub alpha_wass: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub seed: u64,
    pub current_entropy: f64,
    pub entries: Vec<EntrySnapshot>,
}

impl Snapshot {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("entry,row,col,count,group,alpha_ig,alpha_wass,current_entropy\n");
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                e.entry, e.row, e.col, e.count, e.group, e.alpha_ig, e.alpha_wass, self.current_entropy
            );
        }
        out
    }
}

/// Objective values of every entry after a burn-in, for both rank-belief criteria.
pub fn inspect(cfg: &ExperimentConfig, seed: u64, opts: &InspectOptions) -> Result<Snapshot> {
    if cfg.belief.is_none() {
        return Err(Error::invalid("inspect needs a belief section"));
    }
    let (n_e, n_b) = match cfg.sampler {
        SamplerSpec::AlphaIg { n_e, n_b, .. } | SamplerSpec::AlphaWass { n_e, n_b } => (n_e, n_b),
        _ => (20, 1000),
    };
    let (env, mut state) = setup(cfg, seed)?;
    let n = env.entry_count();
    let mut feed = |entry: usize, count: u64, tag: u64| -> Result<()> {
        let mut rng = substream(seed, &[label::BURN_IN, tag, entry as u64]);
        for _ in 0..count {
            let o = env.observe(entry, &mut rng)?;
            state.record(entry, o)?;
        }
        Ok(())
    };
    for e in 0..n {
        feed(e, opts.burn_in, 0)?;
    }
    for &(e, c) in &opts.extra {
        if e >= n {
            return Err(Error::invalid(format!("entry {e} out of range")));
        }
        feed(e, c, 1)?;
    }
    let belief = state.belief().ok_or_else(|| Error::invalid("inspect needs a Bayesian sampler"))?;
    let sc = ScoreConfig {
        n_e,
        n_b,
        n_c: cfg.n_c,
        epsilon: cfg.epsilon,
        mode: cfg.execution,
    };
    let score_seed = crate::rng::derive_seed(seed, &[label::SELECT]);
    let ig = alpha_ig_scores(belief, &sc, EntropyEstimator::Binning, None, score_seed)?;
    let wass = alpha_wass_scores(belief, &sc, score_seed)?;
    let current = entropy_binning(&current_rank_set(belief, &sc, score_seed)?).value;
    let mut names = vec![String::new(); n];
    if let Some(n_good) = cfg.game.n_good() {
        for g in good_bad_groups(n_good, env.size() - n_good) {
            for e in g.entries {
                names[e] = g.name.clone();
            }
        }
    }
    let layout = state.layout();
    Ok(Snapshot {
        seed,
        current_entropy: current,
        entries: (0..n)
            .map(|e| {
                let (row, col) = layout.coords(e);
                EntrySnapshot {
                    entry: e,
                    row,
                    col,
                    count: state.counts()[e],
                    group: names[e].clone(),
                    alpha_ig: ig[e],
                    alpha_wass: wass[e],
                }
            })
            .collect(),
    })
}
