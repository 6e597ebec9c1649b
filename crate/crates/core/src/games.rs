//! Synthetic games with known ground-truth payoffs.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::alpharank::{alpha_rank, AlphaRank};
use crate::error::{Error, Result};
use crate::payoff::{EntryLayout, PayoffMatrix, PayoffTensor};

pub const DEFAULT_P_TOP: f64 = 0.55;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservationModel {
    /// Win/loss outcomes with the true entry as win probability.
    Bernoulli,
    /// `N(x, σ²)` clipped to `[x − clip, x + clip]`.
    ClippedGaussian { sigma: f64, clip: f64 },
}

/// Ground-truth single-population payoffs plus an observation model.
#[derive(Clone, Debug, PartialEq)]
pub struct GameEnv {
    ground_truth: PayoffMatrix,
    model: ObservationModel,
}

impl GameEnv {
    pub fn new(ground_truth: PayoffMatrix, model: ObservationModel) -> Result<Self> {
        match model {
            ObservationModel::Bernoulli => {
                if ground_truth.values().iter().any(|v| !(0.0..=1.0).contains(v)) {
                    return Err(Error::invalid("Bernoulli observations need payoffs in [0, 1]"));
                }
            }
            ObservationModel::ClippedGaussian { sigma, clip } => {
                if !(sigma > 0.0 && sigma.is_finite()) || !(clip >= 0.0 && clip.is_finite()) {
                    return Err(Error::invalid(format!("invalid clipped Gaussian (sigma {sigma}, clip {clip})")));
                }
            }
        }
        Ok(GameEnv { ground_truth, model })
    }

    pub fn ground_truth(&self) -> &PayoffMatrix {
        &self.ground_truth
    }

    pub fn ground_truth_tensor(&self) -> PayoffTensor {
        PayoffTensor::symmetric(&self.ground_truth)
    }

    pub fn observation_model(&self) -> ObservationModel {
        self.model
    }

    pub fn size(&self) -> usize {
        self.ground_truth.size()
    }

    pub fn entry_count(&self) -> usize {
        self.ground_truth.entry_count()
    }

    pub fn true_rank(&self, epsilon: f64) -> Result<AlphaRank> {
        alpha_rank(&self.ground_truth, epsilon)
    }

    /// One noisy observation of `entry` (row-major index).
    pub fn observe<R: Rng + ?Sized>(&self, entry: usize, rng: &mut R) -> Result<f64> {
        let x = *self
            .ground_truth
            .values()
            .get(entry)
            .ok_or_else(|| Error::invalid(format!("entry {entry} out of range")))?;
        Ok(match self.model {
            ObservationModel::Bernoulli => {
                if rng.gen::<f64>() < x {
                    1.0
                } else {
                    0.0
                }
            }
            ObservationModel::ClippedGaussian { sigma, clip } => {
                let o = Normal::new(x, sigma).map_err(|e| Error::invalid(e.to_string()))?.sample(rng);
                o.clamp(x - clip, x + clip)
            }
        })
    }
}

/// `n_good` strong agents that always beat `n_bad` weak ones.
///
/// Within the good block agent `i` beats agent `j < i` with probability
/// `p_top`, so the last good agent is the unique best.
pub fn good_bad_game(n_good: usize, n_bad: usize, p_top: f64) -> Result<GameEnv> {
    if n_good < 2 || n_bad == 0 {
        return Err(Error::invalid("need at least two good and one bad agent"));
    }
    if !(p_top > 0.5 && p_top < 1.0) {
        return Err(Error::invalid(format!("p_top must lie in (0.5, 1), got {p_top}")));
    }
    let s = n_good + n_bad;
    let mut m = PayoffMatrix::constant(s, 0.5)?;
    for i in 0..s {
        for j in 0..s {
            let v = match (i < n_good, j < n_good) {
                (true, false) => 1.0,
                (false, true) => 0.0,
                (true, true) if i > j => p_top,
                (true, true) if i < j => 1.0 - p_top,
                _ => 0.5,
            };
            m.set(i, j, v);
        }
    }
    GameEnv::new(m, ObservationModel::Bernoulli)
}

/// `s × s` payoffs uniform on `[0, 1)` with clipped unit Gaussian noise.
pub fn gaussian_game<R: Rng + ?Sized>(s: usize, rng: &mut R) -> Result<GameEnv> {
    if s < 2 {
        return Err(Error::invalid("gaussian game needs at least two strategies"));
    }
    let values = (0..s * s).map(|_| rng.gen::<f64>()).collect();
    GameEnv::new(PayoffMatrix::new(s, values)?, ObservationModel::ClippedGaussian { sigma: 1.0, clip: 1.0 })
}

/// Smallest gap between any two ground-truth entries (0 on exact ties).
pub fn separability(env: &GameEnv) -> f64 {
    let mut v = env.ground_truth.values().to_vec();
    v.sort_by(f64::total_cmp);
    v.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

/// Named groups of entries.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EntryGroup {
    pub name: String,
    pub entries: Vec<usize>,
}

/// Partition of a good/bad game's entries: the pair between the two best
/// agents (`red`), self-play (`green`), bad vs bad (`purple`), the rest.
pub fn good_bad_groups(n_good: usize, n_bad: usize) -> Vec<EntryGroup> {
    let s = n_good + n_bad;
    let layout = EntryLayout::new(s);
    let (a, b) = (n_good.saturating_sub(2), n_good.saturating_sub(1));
    let mut groups: Vec<EntryGroup> = ["red", "green", "purple", "other"]
        .iter()
        .map(|n| EntryGroup {
            name: n.to_string(),
            entries: Vec::new(),
        })
        .collect();
    for e in 0..layout.entry_count() {
        let (i, j) = layout.coords(e);
        let g = if (i, j) == (a, b) || (i, j) == (b, a) {
            0
        } else if i == j {
            1
        } else if i >= n_good && j >= n_good {
            2
        } else {
            3
        };
        groups[g].entries.push(e);
    }
    groups
}
