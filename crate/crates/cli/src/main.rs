use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use alpharank_ig::alpharank::{alpha_rank, build_transition_finite_alpha, stationary_distribution, DEFAULT_EPSILON};
use alpharank_ig::experiment::{self, ExperimentConfig, InspectOptions};
use alpharank_ig::games::good_bad_groups;
use alpharank_ig::theory::{bound_curve, log_grid, TheoryParams};
use alpharank_ig::{Execution, Payoffs};
use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "alpharank-ig", version, about = "α-rank estimation with information-gain query selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the α-rank of a payoff file (JSON or CSV).
    Rank {
        payoffs: PathBuf,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
        /// Use the finite-α chain with this selection intensity.
        #[arg(long)]
        alpha: Option<f64>,
        /// Population size for the finite-α chain.
        #[arg(long, default_value_t = 50)]
        population: u32,
    },
    /// Run one experiment config for all of its seeds.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the ground-truth payoffs of every seed.
        #[arg(long)]
        dump_ground_truth: bool,
        #[arg(long)]
        sequential: bool,
    },
    /// Run a grid of configs and write summary tables.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        sequential: bool,
    },
    /// Objective values of every entry after a burn-in (CSV on stdout).
    Inspect {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 5)]
        burn_in: u64,
        /// Extra observations of each top-pair entry in good/bad games.
        #[arg(long, default_value_t = 0)]
        extra_red: u64,
    },
    /// Regret-bound curve `T, g(T), min(T·e^g, 1)` as CSV.
    Bound {
        #[arg(long, default_value_t = 1)]
        t_min: u64,
        #[arg(long, default_value_t = 1_000_000_000)]
        t_max: u64,
        #[arg(long, default_value_t = 50)]
        points: usize,
        #[arg(long, default_value_t = 0.1)]
        delta_sep: f64,
        #[arg(long, default_value_t = 0.5)]
        sigma_a2: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma_02: f64,
        /// Entries; the prior covariance is `σ_0²·I` of this size.
        #[arg(long, default_value_t = 16)]
        n_entries: usize,
        #[arg(long, default_value_t = 8.0)]
        m_star_norm2: f64,
    },
}

fn load_config(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}

fn with_mode(mut cfg: ExperimentConfig, sequential: bool) -> ExperimentConfig {
    if sequential {
        cfg.execution = Execution::Sequential;
    }
    cfg
}

fn rank(path: &Path, epsilon: f64, alpha: Option<f64>, population: u32) -> Result<()> {
    let payoffs = Payoffs::load(path).with_context(|| format!("loading {}", path.display()))?;
    let r = match (alpha, payoffs) {
        (None, Payoffs::Single(m)) => alpha_rank(&m, epsilon)?,
        (None, Payoffs::Multi(t)) => alpha_rank(&t.single_population().context("pass --alpha for multi-population games")?, epsilon)?,
        (Some(a), Payoffs::Single(m)) => alpha_rank_finite(&alpharank_ig::PayoffTensor::symmetric(&m), a, population)?,
        (Some(a), Payoffs::Multi(t)) => alpha_rank_finite(&t, a, population)?,
    };
    println!("{}", json!({ "alpha_rank": r.probabilities() }));
    Ok(())
}

fn alpha_rank_finite(t: &alpharank_ig::PayoffTensor, alpha: f64, m: u32) -> Result<alpharank_ig::AlphaRank> {
    Ok(stationary_distribution(&build_transition_finite_alpha(t, alpha, m)?)?)
}

fn run(config: &Path, out: &Path, dump: bool, sequential: bool) -> Result<()> {
    let cfg = with_mode(experiment::resolve(&load_config(config)?)?, sequential);
    fs::create_dir_all(out)?;
    if dump {
        for &seed in &cfg.seeds {
            experiment::dump_ground_truth(&out.join(format!("ground_truth_seed_{seed}.json")), &cfg, seed)?;
        }
    }
    let records = experiment::run(&cfg)?;
    for r in &records {
        experiment::write_record(out, &cfg, r)?;
    }
    let failed: Vec<&experiment::RunRecord> = records.iter().filter(|r| r.error.is_some()).collect();
    if let Some(f) = failed.first() {
        bail!("seed {} failed: {}", f.seed, f.error.as_deref().unwrap_or_default());
    }
    println!("{}", json!({ "out": out, "seeds": records.len(), "config_hash": cfg.hash() }));
    Ok(())
}

fn sweep(config: &Path, out: &Path, sequential: bool) -> Result<()> {
    let cfgs: Vec<ExperimentConfig> = experiment::resolve_sweep(&load_config(config)?)?
        .into_iter()
        .map(|c| with_mode(c, sequential))
        .collect();
    let cells = experiment::sweep(&cfgs)?;
    experiment::write_sweep(out, &cells)?;
    let failures: usize = cells.iter().map(|c| c.failures()).sum();
    println!("{}", json!({ "out": out, "configs": cells.len(), "failures": failures }));
    Ok(())
}

fn inspect(config: &Path, seed: Option<u64>, burn_in: u64, extra_red: u64) -> Result<()> {
    let cfg = experiment::resolve(&load_config(config)?)?;
    let mut opts = InspectOptions {
        burn_in,
        extra: Vec::new(),
    };
    if extra_red > 0 {
        let n_good = cfg.game.n_good().ok_or_else(|| anyhow!("--extra-red needs a good/bad game"))?;
        let size = cfg.game.build(0)?.size();
        let red = &good_bad_groups(n_good, size - n_good)[0];
        opts.extra = red.entries.iter().map(|&e| (e, extra_red)).collect();
    }
    let snap = experiment::inspect(&cfg, seed.unwrap_or(cfg.seeds[0]), &opts)?;
    print!("{}", snap.to_csv());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn bound(t_min: u64, t_max: u64, points: usize, delta_sep: f64, sigma_a2: f64, sigma_02: f64, n: usize, m2: f64) -> Result<()> {
    let params = TheoryParams {
        delta_sep,
        sigma_a2,
        sigma_02,
        n_entries: n,
        prior_cov: alpharank_ig::theory::scaled_identity(n, sigma_02),
        m_star_norm2: m2,
    };
    println!("t,g,bound,vacuous");
    for b in bound_curve(&params, &log_grid(t_min, t_max, points))? {
        println!("{},{},{},{}", b.t, b.g, b.bound, b.vacuous);
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Rank {
            payoffs,
            epsilon,
            alpha,
            population,
        } => rank(&payoffs, epsilon, alpha, population),
        Command::Run {
            config,
            out,
            dump_ground_truth,
            sequential,
        } => run(&config, &out, dump_ground_truth, sequential),
        Command::Sweep { config, out, sequential } => sweep(&config, &out, sequential),
        Command::Inspect {
            config,
            seed,
            burn_in,
            extra_red,
        } => inspect(&config, seed, burn_in, extra_red),
        Command::Bound {
            t_min,
            t_max,
            points,
            delta_sep,
            sigma_a2,
            sigma_02,
            n_entries,
            m_star_norm2,
        } => bound(t_min, t_max, points, delta_sep, sigma_a2, sigma_02, n_entries, m_star_norm2),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", json!({ "error": "usage", "message": e.to_string().trim() }));
            return ExitCode::from(2);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = e.downcast_ref::<alpharank_ig::Error>().map_or("runtime", |x| x.kind());
            eprintln!("{}", json!({ "error": kind, "message": format!("{e:#}") }));
            ExitCode::FAILURE
        }
    }
}
