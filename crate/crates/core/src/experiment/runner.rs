use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::json;

use super::config::ExperimentConfig;
use super::metrics::{regret_jb, regret_jf, regret_jm};
use crate::alpharank::AlphaRank;
use crate::error::{Error, Result};
use crate::games::GameEnv;
use crate::payoff::Payoffs;
use crate::rng::{derive_seed, label, substream};
use crate::samplers::{SamplerState, Selection};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EvalPoint {
    pub queries: u64,
    pub jb: f64,
    pub jf: f64,
    pub jm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunRecord {
    pub seed: u64,
    pub points: Vec<EvalPoint>,
    /// Real queries per entry.
    pub counts: Vec<u64>,
    pub total_queries: u64,
    pub rounds: u64,
    /// Set when RG-UCB resolved every ordering before the budget ran out.
    pub terminated_early: bool,
    pub config_hash: String,
    pub wall_clock_secs: f64,
    /// Failure that cut the run short; the points logged before it are kept.
    pub error: Option<String>,
}

impl RunRecord {
    /// `queries,jb,jf,jm` rows.
    pub fn metrics_csv(&self) -> String {
        let mut out = String::from("queries,jb,jf,jm\n");
        for p in &self.points {
            let _ = writeln!(out, "{},{},{},{}", p.queries, p.jb, p.jf, p.jm);
        }
        out
    }

    pub fn final_point(&self) -> Option<&EvalPoint> {
        self.points.last()
    }
}

/// Rounds after which metrics are logged, `points` of them evenly spaced.
pub fn eval_schedule(rounds: u64, points: usize) -> Vec<u64> {
    let p = points as u64;
    let mut out: Vec<u64> = (1..=p).map(|k| (k * rounds).div_ceil(p)).filter(|&r| r > 0).collect();
    out.dedup();
    out
}

fn evaluate(state: &SamplerState, r_gt: &AlphaRank, cfg: &ExperimentConfig, seed: u64, round: u64, queries: u64) -> Result<EvalPoint> {
    let jm = regret_jm(&state.mean_payoffs()?, r_gt, cfg.epsilon)?;
    let set = state.rank_samples(cfg.eval_samples, derive_seed(seed, &[label::EVAL, round]))?;
    Ok(EvalPoint {
        queries,
        jb: regret_jb(&set),
        jf: regret_jf(&set, r_gt)?,
        jm,
    })
}

/// Environment and initial sampler state for one seed.
pub fn setup(cfg: &ExperimentConfig, seed: u64) -> Result<(GameEnv, SamplerState)> {
    cfg.validate()?;
    let env = cfg.game.build(seed)?;
    let prior = cfg.prior()?;
    let state = SamplerState::new(cfg.sampler.clone(), prior, env.size(), cfg.sampler_params(seed))?;
    Ok((env, state))
}

/// Query `entry` `n` times in round `round` and commit the observations.
pub fn observe_round(env: &GameEnv, state: &mut SamplerState, entry: usize, n: u64, seed: u64, round: u64) -> Result<()> {
    let mut rng = substream(seed, &[label::ENV, round]);
    for _ in 0..n {
        let o = env.observe(entry, &mut rng)?;
        state.record(entry, o)?;
    }
    Ok(())
}

/// One full run for `seed`.
pub fn run_seed(cfg: &ExperimentConfig, seed: u64) -> RunRecord {
    let start = Instant::now();
    let mut record = RunRecord {
        seed,
        points: Vec::new(),
        counts: Vec::new(),
        total_queries: 0,
        rounds: 0,
        terminated_early: false,
        config_hash: cfg.hash(),
        wall_clock_secs: 0.0,
        error: None,
    };
    if let Err(e) = run_into(cfg, seed, &mut record) {
        record.error = Some(e.to_string());
    }
    record.wall_clock_secs = start.elapsed().as_secs_f64();
    record
}

fn run_into(cfg: &ExperimentConfig, seed: u64, record: &mut RunRecord) -> Result<()> {
    let (env, mut state) = setup(cfg, seed)?;
    let r_gt = env.true_rank(cfg.epsilon)?;
    record.counts = state.counts().to_vec();
    let rounds = cfg.rounds();
    let schedule = eval_schedule(rounds, cfg.eval_points);
    record.points.push(evaluate(&state, &r_gt, cfg, seed, 0, 0)?);
    let mut frozen: Option<EvalPoint> = None;
    let mut next = 0;
    for round in 1..=rounds {
        if frozen.is_none() {
            match state.select(round)? {
                Selection::Entry(entry) => {
                    observe_round(&env, &mut state, entry, cfg.n_r, seed, round)?;
                    record.total_queries += cfg.n_r;
                    record.rounds = round;
                    record.counts = state.counts().to_vec();
                }
                Selection::Done => {
                    record.terminated_early = true;
                    frozen = Some(evaluate(&state, &r_gt, cfg, seed, round, 0)?);
                }
            }
        }
        if next < schedule.len() && schedule[next] == round {
            next += 1;
            let queries = round * cfg.n_r;
            let point = match frozen {
                Some(p) => EvalPoint { queries, ..p },
                None => evaluate(&state, &r_gt, cfg, seed, round, queries)?,
            };
            record.points.push(point);
        }
    }
    Ok(())
}

/// Run every seed of `cfg`.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    Ok(crate::par::map_indexed(cfg.execution, cfg.seeds.len(), |i| run_seed(cfg, cfg.seeds[i])))
}

/// Write `seed_<n>.csv` and `seed_<n>.json` into `dir`.
pub fn write_record(dir: &Path, cfg: &ExperimentConfig, record: &RunRecord) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(format!("seed_{}.csv", record.seed)), record.metrics_csv())?;
    let manifest = json!({
        "config": cfg,
        "seed": record.seed,
        "version": env!("CARGO_PKG_VERSION"),
        "config_hash": record.config_hash,
        "queries_per_round": cfg.n_r,
        "total_queries": record.total_queries,
        "rounds": record.rounds,
        "terminated_early": record.terminated_early,
        "counts": record.counts,
        "wall_clock_secs": record.wall_clock_secs,
        "error": record.error,
    });
    fs::write(dir.join(format!("seed_{}.json", record.seed)), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

/// Write the ground truth for `seed` as a payoff JSON document.
pub fn dump_ground_truth(path: &Path, cfg: &ExperimentConfig, seed: u64) -> Result<()> {
    let env = cfg.game.build(seed)?;
    Payoffs::Single(env.ground_truth().clone()).save_json(path)
}

/// Proportion of real queries falling in each group.
pub fn entry_proportions(counts: &[u64], groups: &[crate::games::EntryGroup]) -> Result<Vec<(String, f64)>> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::invalid("no queries recorded"));
    }
    groups
        .iter()
        .map(|g| {
            let mut s = 0u64;
            for &e in &g.entries {
                s += *counts.get(e).ok_or_else(|| Error::invalid(format!("entry {e} out of range")))?;
            }
            Ok((g.name.clone(), s as f64 / total as f64))
        })
        .collect()
}
