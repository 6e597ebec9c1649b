use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::belief::{GaussianBelief, KernelSpec};
use crate::error::{Error, Result};
use crate::games::{gaussian_game, good_bad_game, GameEnv, ObservationModel, DEFAULT_P_TOP};
use crate::par::Execution;
use crate::payoff::PayoffMatrix;
use crate::rng::{label, substream};
use crate::samplers::{SamplerParams, SamplerSpec, DEFAULT_N_C};

pub const DEFAULT_EVAL_POINTS: usize = 100;
pub const DEFAULT_EVAL_SAMPLES: usize = 2000;
pub const PRESET_GAMES: [&str; 4] = ["2g2b", "3g5b", "3g5b_prior", "gauss4"];
pub const PRESET_SAMPLERS: [&str; 6] = ["alpha_ig_bins", "alpha_ig_nsb", "alpha_wass", "payoff", "uniform", "rg_ucb"];
/// Confidence levels swept for RG-UCB.
pub const RG_UCB_DELTAS: [f64; 7] = [0.4, 0.3, 0.2, 0.1, 0.05, 0.01, 0.001];

fn default_p_top() -> f64 {
    DEFAULT_P_TOP
}
fn default_one() -> f64 {
    1.0
}
fn default_n_c() -> u32 {
    DEFAULT_N_C
}
fn default_epsilon() -> f64 {
    crate::alpharank::DEFAULT_EPSILON
}
fn default_eval_points() -> usize {
    DEFAULT_EVAL_POINTS
}
fn default_eval_samples() -> usize {
    DEFAULT_EVAL_SAMPLES
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GameSpec {
    GoodBad {
        n_good: usize,
        n_bad: usize,
        #[serde(default = "default_p_top")]
        p_top: f64,
    },
    /// Random game; drawn from the run seed unless `game_seed` is set.
    Gaussian {
        size: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        game_seed: Option<u64>,
        #[serde(default = "default_one")]
        sigma: f64,
        #[serde(default = "default_one")]
        clip: f64,
    },
    Matrix {
        values: Vec<Vec<f64>>,
        observation: ObservationModel,
    },
}

impl GameSpec {
    pub fn build(&self, seed: u64) -> Result<GameEnv> {
        match self {
            GameSpec::GoodBad { n_good, n_bad, p_top } => good_bad_game(*n_good, *n_bad, *p_top),
            GameSpec::Gaussian {
                size,
                game_seed,
                sigma,
                clip,
            } => {
                let g = gaussian_game(*size, &mut substream(game_seed.unwrap_or(seed), &[label::GAME]))?;
                GameEnv::new(g.ground_truth().clone(), ObservationModel::ClippedGaussian { sigma: *sigma, clip: *clip })
            }
            GameSpec::Matrix { values, observation } => GameEnv::new(PayoffMatrix::from_rows(values)?, *observation),
        }
    }

    pub fn n_good(&self) -> Option<usize> {
        match self {
            GameSpec::GoodBad { n_good, .. } => Some(*n_good),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeliefSpec {
    pub kernel: KernelSpec,
    /// Aleatoric noise variance `σ_A²`.
    pub obs_noise_var: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub game: GameSpec,
    pub sampler: SamplerSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub belief: Option<BeliefSpec>,
    /// Total environment queries.
    pub budget: u64,
    /// Real observations per selection.
    pub n_r: u64,
    #[serde(default = "default_n_c")]
    pub n_c: u32,
    pub bounds: [f64; 2],
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_eval_points")]
    pub eval_points: usize,
    #[serde(default = "default_eval_samples")]
    pub eval_samples: usize,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub execution: Execution,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_r == 0 || self.budget < self.n_r {
            return Err(Error::invalid(format!("budget {} must be at least N_r = {}", self.budget, self.n_r)));
        }
        if self.eval_points == 0 || self.eval_points as u64 > self.budget {
            return Err(Error::invalid("eval points must be in 1..=budget"));
        }
        if self.eval_samples == 0 {
            return Err(Error::invalid("eval samples must be positive"));
        }
        if self.seeds.is_empty() {
            return Err(Error::invalid("at least one seed is required"));
        }
        if self.sampler.uses_belief() && self.belief.is_none() {
            return Err(Error::invalid("this sampler needs a belief section"));
        }
        Ok(())
    }

    pub fn rounds(&self) -> u64 {
        self.budget / self.n_r
    }

    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            let kind = serde_json::to_value(&self.sampler)
                .ok()
                .and_then(|v| v.get("kind").and_then(Value::as_str).map(str::to_owned))
                .unwrap_or_default();
            kind
        })
    }

    pub fn prior(&self) -> Result<Option<GaussianBelief>> {
        match (&self.belief, self.sampler.uses_belief()) {
            (Some(b), true) => {
                let env_size = self.game.build(self.seeds[0])?.size();
                Ok(Some(GaussianBelief::prior(&b.kernel, env_size * env_size, b.obs_noise_var)?))
            }
            _ => Ok(None),
        }
    }

    pub fn sampler_params(&self, seed: u64) -> SamplerParams {
        SamplerParams {
            n_c: self.n_c,
            epsilon: self.epsilon,
            bounds: (self.bounds[0], self.bounds[1]),
            seed,
            mode: self.execution,
            n_good: self.game.n_good(),
        }
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Preset document for a named game and sampler.
pub fn preset_value(game: &str, sampler: &str) -> Result<Value> {
    let (game_spec, budget, n_r, n_e, n_b, bounds, delta) = match game {
        "2g2b" => (json!({"kind": "good_bad", "n_good": 2, "n_bad": 2}), 5000, 10, 20, 1000, [0.0, 1.0], 0.4),
        "3g5b" => (json!({"kind": "good_bad", "n_good": 3, "n_bad": 5}), 100_000, 500, 10, 500, [0.0, 1.0], 0.05),
        "3g5b_prior" => (json!({"kind": "good_bad", "n_good": 3, "n_bad": 5}), 20_000, 100, 10, 500, [0.0, 1.0], 0.05),
        "gauss4" => (json!({"kind": "gaussian", "size": 4}), 10_000, 100, 10, 500, [-1.0, 2.0], 0.3),
        other => return Err(Error::invalid(format!("unknown preset game '{other}'"))),
    };
    let sampler_spec = match sampler {
        "alpha_ig_bins" => json!({"kind": "alpha_ig", "n_e": n_e, "n_b": n_b, "estimator": "binning"}),
        "alpha_ig_nsb" => json!({"kind": "alpha_ig", "n_e": n_e, "n_b": n_b, "estimator": "nsb"}),
        "alpha_wass" => json!({"kind": "alpha_wass", "n_e": n_e, "n_b": n_b}),
        "payoff" => json!({"kind": "payoff_ig"}),
        "uniform" => json!({"kind": "uniform"}),
        "rg_ucb" => json!({"kind": "rg_ucb", "delta": delta, "pseudo_samples": game == "3g5b_prior"}),
        other => return Err(Error::invalid(format!("unknown preset sampler '{other}'"))),
    };
    // (σ_0², σ_A²)
    let (prior_var, noise_var) = match (game, sampler) {
        ("gauss4", "alpha_ig_nsb") => (0.5, 0.5),
        ("gauss4", "alpha_wass") => (1.0, 0.5),
        ("gauss4", _) => (1.0, 1.0),
        ("3g5b_prior", _) => (1.0, 0.5),
        (_, "alpha_wass") => (1.0, 0.25),
        _ => (1.0, 0.5),
    };
    let kernel = if game == "3g5b_prior" {
        json!({"kind": "block_antisymmetric", "n_good": 3, "n_bad": 5, "mean": 0.5})
    } else {
        json!({"kind": "independent", "mean": 0.5, "variance": prior_var})
    };
    let mut doc = json!({
        "name": format!("{game}-{sampler}"),
        "game": game_spec,
        "sampler": sampler_spec,
        "budget": budget,
        "n_r": n_r,
        "n_c": DEFAULT_N_C,
        "bounds": bounds,
        "epsilon": crate::alpharank::DEFAULT_EPSILON,
        "eval_points": DEFAULT_EVAL_POINTS,
        "eval_samples": DEFAULT_EVAL_SAMPLES,
        "seeds": (0..10).collect::<Vec<u64>>(),
    });
    if sampler != "rg_ucb" {
        doc["belief"] = json!({"kernel": kernel, "obs_noise_var": noise_var});
    }
    Ok(doc)
}

pub fn preset(game: &str, sampler: &str) -> Result<ExperimentConfig> {
    from_value(preset_value(game, sampler)?)
}

/// Recursively overlay `patch` onto `base`. Objects whose `kind` changes are replaced.
pub fn deep_merge(base: &mut Value, patch: &Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            if let (Some(bk), Some(pk)) = (b.get("kind"), p.get("kind")) {
                if bk != pk {
                    *b = p.clone();
                    return;
                }
            }
            for (k, v) in p {
                match b.get_mut(k) {
                    Some(slot) => deep_merge(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, p) => *b = p.clone(),
    }
}

fn from_value(v: Value) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = serde_json::from_value(v)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Resolve a config document. `{"preset": game, "sampler": name, ...}`
/// starts from the named preset and overlays the remaining fields.
pub fn resolve(doc: &Value) -> Result<ExperimentConfig> {
    let obj = doc.as_object().ok_or_else(|| Error::Parse("config must be a JSON object".into()))?;
    let Some(game) = obj.get("preset") else {
        return from_value(doc.clone());
    };
    let game = game.as_str().ok_or_else(|| Error::Parse("'preset' must be a string".into()))?;
    let mut rest: Map<String, Value> = obj.clone();
    rest.remove("preset");
    let sampler = match rest.get("sampler") {
        Some(Value::String(s)) => {
            let s = s.clone();
            rest.remove("sampler");
            s
        }
        _ => "alpha_ig_bins".to_string(),
    };
    let mut base = preset_value(game, &sampler)?;
    deep_merge(&mut base, &Value::Object(rest));
    from_value(base)
}

/// A sweep document: `{"base": {...}, "configs": [{...}, ...]}`; each cell is
/// the base overlaid with the cell and resolved like a single config.
pub fn resolve_sweep(doc: &Value) -> Result<Vec<ExperimentConfig>> {
    let cells = doc
        .get("configs")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Parse("sweep needs a 'configs' array".into()))?;
    if cells.is_empty() {
        return Err(Error::invalid("sweep has no configs"));
    }
    let base = doc.get("base").cloned().unwrap_or_else(|| json!({}));
    cells
        .iter()
        .map(|cell| {
            let mut v = base.clone();
            // sampler shorthand must survive into resolve(), so copy it verbatim
            deep_merge(&mut v, cell);
            if let (Some(Value::String(_)), Some(s)) = (v.get("sampler"), cell.get("sampler")) {
                v["sampler"] = s.clone();
            }
            resolve(&v)
        })
        .collect()
}
