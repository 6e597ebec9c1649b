//! Gaussian epistemic belief over payoff entries.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::payoff::{EntryLayout, PayoffMatrix};

/// Jitter added to the diagonal when a Cholesky factorization fails, escalated
/// tenfold per retry up to [`MAX_JITTER`].
pub const INITIAL_JITTER: f64 = 1e-9;
pub const MAX_JITTER: f64 = 1e-6;

pub const DEFAULT_SCALE_DIVISOR: f64 = 500.0;

/// How the block-equality base kernel treats pairs of entries.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockRule {
    /// Entries in the same good-vs-bad, bad-vs-good or bad-vs-bad block are
    /// fully correlated; good-vs-good entries are independent.
    #[default]
    WithinBlock,
    /// `k(b_i, b_j) = 1` for `i ≠ j`, `k(b_i, b_i) = 0` for blocks 2-4 and
    /// `k(b_1, b_1) = 1`, exactly as tabulated for the prior-knowledge game.
    Literal,
}

/// Prior over the payoff entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    /// `N(mean, variance)` independently for every entry.
    Independent { mean: f64, variance: f64 },
    /// Block-equality kernel made anti-symmetric about the mean,
    /// `K = k'ᵀ k' / scale_divisor`.
    BlockAntisymmetric {
        n_good: usize,
        n_bad: usize,
        mean: f64,
        #[serde(default = "default_scale_divisor")]
        scale_divisor: f64,
        #[serde(default)]
        rule: BlockRule,
    },
}

fn default_scale_divisor() -> f64 {
    DEFAULT_SCALE_DIVISOR
}

/// Block of entry `(x, y)`: 1 good-vs-good, 2 good-vs-bad, 3 bad-vs-good, 4 bad-vs-bad.
pub fn block_of(row: usize, col: usize, n_good: usize) -> u8 {
    match (row < n_good, col < n_good) {
        (true, true) => 1,
        (true, false) => 2,
        (false, true) => 3,
        (false, false) => 4,
    }
}

fn base_kernel(rule: BlockRule, layout: EntryLayout, n_good: usize, a: usize, b: usize) -> f64 {
    let (ra, ca) = layout.coords(a);
    let (rb, cb) = layout.coords(b);
    let (ba, bb) = (block_of(ra, ca, n_good), block_of(rb, cb, n_good));
    let hit = match rule {
        BlockRule::Literal => ba != bb || ba == 1,
        BlockRule::WithinBlock => {
            if ba != bb {
                false
            } else if ba == 1 {
                a == b
            } else {
                true
            }
        }
    };
    if hit {
        1.0
    } else {
        0.0
    }
}

/// `K = k'ᵀ k' / divisor` with `k'(σ,τ) = k(σ,τ) + k(σᵗ,τᵗ) − k(σ,τᵗ) − k(σᵗ,τ)`.
pub fn block_antisymmetric_covariance(n_good: usize, n_bad: usize, scale_divisor: f64, rule: BlockRule) -> DMatrix<f64> {
    let layout = EntryLayout::new(n_good + n_bad);
    let n = layout.entry_count();
    let k = |a, b| base_kernel(rule, layout, n_good, a, b);
    let kp = DMatrix::from_fn(n, n, |a, b| {
        let (at, bt) = (layout.transpose(a), layout.transpose(b));
        k(a, b) + k(at, bt) - k(a, bt) - k(at, b)
    });
    (kp.transpose() * kp) / scale_divisor
}

/// Multivariate Gaussian over the `S × S` entries of a payoff matrix, with
/// Gaussian observation noise `σ_A²`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianBelief {
    layout: EntryLayout,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    obs_noise_var: f64,
    diagonal: bool,
}

fn side_of(entry_count: usize) -> Result<usize> {
    let side = (entry_count as f64).sqrt().round() as usize;
    if side == 0 || side * side != entry_count {
        return Err(Error::invalid(format!("{entry_count} entries do not form a square payoff matrix")));
    }
    Ok(side)
}

impl GaussianBelief {
    pub fn prior(spec: &KernelSpec, entry_count: usize, obs_noise_var: f64) -> Result<Self> {
        let side = side_of(entry_count)?;
        match *spec {
            KernelSpec::Independent { mean, variance } => {
                if !(variance > 0.0 && variance.is_finite()) {
                    return Err(Error::invalid(format!("prior variance must be positive, got {variance}")));
                }
                Self::from_parts(
                    side,
                    DVector::from_element(entry_count, mean),
                    DMatrix::from_diagonal_element(entry_count, entry_count, variance),
                    obs_noise_var,
                )
            }
            KernelSpec::BlockAntisymmetric {
                n_good,
                n_bad,
                mean,
                scale_divisor,
                rule,
            } => {
                if n_good + n_bad != side {
                    return Err(Error::shape(format!("{side} strategies"), n_good + n_bad));
                }
                if !(scale_divisor > 0.0 && scale_divisor.is_finite()) {
                    return Err(Error::invalid("kernel scale divisor must be positive"));
                }
                let cov = block_antisymmetric_covariance(n_good, n_bad, scale_divisor, rule);
                Self::from_parts(side, DVector::from_element(entry_count, mean), cov, obs_noise_var)
            }
        }
    }

    pub fn from_parts(side: usize, mean: DVector<f64>, cov: DMatrix<f64>, obs_noise_var: f64) -> Result<Self> {
        let n = side * side;
        if mean.len() != n || cov.nrows() != n || cov.ncols() != n {
            return Err(Error::shape(format!("{n} entries"), format!("mean {} cov {}x{}", mean.len(), cov.nrows(), cov.ncols())));
        }
        if !(obs_noise_var > 0.0 && obs_noise_var.is_finite()) {
            return Err(Error::invalid(format!("observation noise variance must be positive, got {obs_noise_var}")));
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("belief parameters must be finite"));
        }
        let asym = (0..n)
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .map(|(i, j)| (cov[(i, j)] - cov[(j, i)]).abs())
            .fold(0.0, f64::max);
        if asym > 1e-10 {
            return Err(Error::invalid(format!("covariance is not symmetric (max deviation {asym:e})")));
        }
        if (0..n).any(|i| cov[(i, i)] < 0.0) {
            return Err(Error::invalid("covariance has a negative variance"));
        }
        let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || cov[(i, j)] == 0.0));
        Ok(Self {
            layout: EntryLayout::new(side),
            mean,
            cov,
            obs_noise_var,
            diagonal,
        })
    }

    pub fn size(&self) -> usize {
        self.layout.size
    }

    pub fn layout(&self) -> EntryLayout {
        self.layout
    }

    pub fn entry_count(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn obs_noise_var(&self) -> f64 {
        self.obs_noise_var
    }

    /// True while the covariance has no off-diagonal terms (independent kernel).
    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }

    pub fn marginal_variance(&self, entry: usize) -> f64 {
        self.cov[(entry, entry)]
    }

    /// Variance of a noisy observation of `entry`.
    pub fn predictive_variance(&self, entry: usize) -> f64 {
        self.cov[(entry, entry)] + self.obs_noise_var
    }

    fn check_entry(&self, entry: usize) -> Result<()> {
        if entry >= self.entry_count() {
            return Err(Error::invalid(format!("entry {entry} out of range for {} entries", self.entry_count())));
        }
        Ok(())
    }

    fn condition_with_noise(&self, entry: usize, observation: f64, noise_var: f64) -> Result<Self> {
        self.check_entry(entry)?;
        if !observation.is_finite() {
            return Err(Error::invalid(format!("observation {observation} is not finite")));
        }
        let mut out = self.clone();
        let var = self.cov[(entry, entry)];
        let mu = self.mean[entry];
        if self.diagonal {
            out.mean[entry] = (noise_var * mu + var * observation) / (var + noise_var);
            out.cov[(entry, entry)] = var * noise_var / (var + noise_var);
            return Ok(out);
        }
        let denom = var + noise_var;
        let gain = self.cov.column(entry).clone_owned();
        let innovation = observation - mu;
        out.mean.axpy(innovation / denom, &gain, 1.0);
        out.cov.ger(-1.0 / denom, &gain, &gain, 1.0);
        let n = self.entry_count();
        for i in 0..n {
            for j in 0..i {
                let v = 0.5 * (out.cov[(i, j)] + out.cov[(j, i)]);
                out.cov[(i, j)] = v;
                out.cov[(j, i)] = v;
            }
            if out.cov[(i, i)] < 0.0 {
                out.cov[(i, i)] = 0.0;
            }
        }
        Ok(out)
    }

    /// Posterior after one noisy observation of `entry`.
    pub fn condition(&self, entry: usize, observation: f64) -> Result<Self> {
        self.condition_with_noise(entry, observation, self.obs_noise_var)
    }

    /// Posterior after observing the same value `times` times. Evaluated as a
    /// single update with noise `σ_A² / times`, which is the same Gaussian.
    pub fn condition_repeated(&self, entry: usize, observation: f64, times: u32) -> Result<Self> {
        if times == 0 {
            return Err(Error::invalid("repeat count must be at least 1"));
        }
        self.condition_with_noise(entry, observation, self.obs_noise_var / f64::from(times))
    }

    /// Draw from the predictive distribution of a noisy observation of `entry`.
    pub fn hallucinate_observation<R: Rng + ?Sized>(&self, entry: usize, rng: &mut R) -> Result<f64> {
        self.check_entry(entry)?;
        let z: f64 = rng.sample(StandardNormal);
        Ok(self.mean[entry] + self.predictive_variance(entry).sqrt() * z)
    }

    pub fn posterior_mean(&self) -> PayoffMatrix {
        PayoffMatrix::new(self.size(), self.mean.iter().copied().collect()).expect("belief mean is finite")
    }

    /// Factor the covariance for repeated sampling.
    pub fn sampler(&self) -> Result<BeliefSampler> {
        let n = self.entry_count();
        let mean: Vec<f64> = self.mean.iter().copied().collect();
        if self.diagonal {
            let sd = (0..n).map(|i| self.cov[(i, i)].sqrt()).collect();
            return Ok(BeliefSampler {
                mean,
                factor: Factor::Diagonal(sd),
            });
        }
        // Entries with exactly zero variance are deterministic and left out of the factorization.
        let active: Vec<usize> = (0..n).filter(|&i| self.cov[(i, i)] > 0.0).collect();
        let sub = DMatrix::from_fn(active.len(), active.len(), |i, j| self.cov[(active[i], active[j])]);
        let lower = cholesky_with_jitter(sub)?;
        let m = active.len();
        let mut packed = Vec::with_capacity(m * (m + 1) / 2);
        for i in 0..m {
            for j in 0..=i {
                packed.push(lower[(i, j)]);
            }
        }
        Ok(BeliefSampler {
            mean,
            factor: Factor::Dense { active, lower: packed },
        })
    }

    pub fn sample_payoff<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<PayoffMatrix> {
        let sampler = self.sampler()?;
        let mut out = vec![0.0; self.entry_count()];
        sampler.draw(rng, &mut out);
        PayoffMatrix::new(self.size(), out)
    }
}

fn cholesky_with_jitter(cov: DMatrix<f64>) -> Result<DMatrix<f64>> {
    if cov.nrows() == 0 {
        return Ok(cov);
    }
    if let Some(c) = cov.clone().cholesky() {
        return Ok(c.l());
    }
    let n = cov.nrows();
    let mut jitter = INITIAL_JITTER;
    while jitter <= MAX_JITTER * (1.0 + 1e-9) {
        let attempt = &cov + DMatrix::<f64>::identity(n, n) * jitter;
        if let Some(c) = attempt.cholesky() {
            return Ok(c.l());
        }
        jitter *= 10.0;
    }
    Err(Error::Factorization(format!("covariance of size {n} is not positive semidefinite")))
}

#[derive(Clone, Debug)]
enum Factor {
    Diagonal(Vec<f64>),
    Dense { active: Vec<usize>, lower: Vec<f64> },
}

/// Pre-factored belief, `x = μ + L z`.
#[derive(Clone, Debug)]
pub struct BeliefSampler {
    mean: Vec<f64>,
    factor: Factor,
}

impl BeliefSampler {
    pub fn entry_count(&self) -> usize {
        self.mean.len()
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        out.copy_from_slice(&self.mean);
        match &self.factor {
            Factor::Diagonal(sd) => {
                for (o, &s) in out.iter_mut().zip(sd) {
                    let z: f64 = rng.sample(StandardNormal);
                    *o += s * z;
                }
            }
            Factor::Dense { active, lower } => {
                let m = active.len();
                let z: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
                let mut offset = 0;
                for i in 0..m {
                    let row = &lower[offset..offset + i + 1];
                    let acc: f64 = row.iter().zip(&z).map(|(l, z)| l * z).sum();
                    out[active[i]] += acc;
                    offset += i + 1;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use approx::assert_relative_eq;

    fn independent(n: usize, mean: f64, var: f64, noise: f64) -> GaussianBelief {
        GaussianBelief::prior(&KernelSpec::Independent { mean, variance: var }, n, noise).unwrap()
    }

    #[test]
    fn independent_prior() {
        let b = independent(16, 0.5, 1.0, 0.5);
        assert!(b.mean().iter().all(|&m| m == 0.5));
        assert_eq!(b.covariance(), &DMatrix::identity(16, 16));
        assert!(b.is_diagonal());
        assert_eq!(independent(1, 0.0, 0.5, 0.5).marginal_variance(0), 0.5);
        assert!(GaussianBelief::prior(&KernelSpec::Independent { mean: 0.0, variance: 0.0 }, 4, 0.5).is_err());
        assert!(GaussianBelief::prior(&KernelSpec::Independent { mean: 0.0, variance: 1.0 }, 4, 0.0).is_err());
        assert!(GaussianBelief::prior(&KernelSpec::Independent { mean: 0.0, variance: 1.0 }, 5, 0.5).is_err());
    }

    #[test]
    fn conjugate_update() {
        let b = independent(4, 0.5, 1.0, 0.5).condition(0, 1.0).unwrap();
        assert_relative_eq!(b.mean()[0], 5.0 / 6.0, epsilon = 1e-12);
        assert_relative_eq!(b.marginal_variance(0), 1.0 / 3.0, epsilon = 1e-12);
        assert_eq!(b.mean()[1], 0.5);
        let same = independent(4, 0.5, 1.0, 0.5).condition(2, 0.5).unwrap();
        assert_eq!(same.mean()[2], 0.5);
        assert!(independent(4, 0.5, 1.0, 0.5).condition(4, 0.5).is_err());
        assert!(independent(4, 0.5, 1.0, 0.5).condition(0, f64::NAN).is_err());
    }

    #[test]
    fn repeated_conditioning_closed_form() {
        let (s2, n2, nc) = (1.0, 0.5, 100u32);
        let b = independent(4, 0.5, s2, n2);
        let once = b.condition_repeated(1, 0.9, 1).unwrap();
        assert_eq!(once, b.condition(1, 0.9).unwrap());
        let many = b.condition_repeated(1, 0.9, nc).unwrap();
        let nc = f64::from(nc);
        assert_relative_eq!(many.marginal_variance(1), s2 * n2 / (n2 + nc * s2), epsilon = 1e-12);
        assert_relative_eq!(many.mean()[1], (n2 * 0.5 + nc * s2 * 0.9) / (n2 + nc * s2), epsilon = 1e-12);
        assert!(many.marginal_variance(1) < once.marginal_variance(1));
        assert!(b.condition_repeated(1, 0.9, 0).is_err());
    }

    #[test]
    fn correlated_two_entry_update() {
        // 1x1 layouts are the only square with a single entry, so embed the pair in a 2x2 matrix
        let cov = DMatrix::from_row_slice(4, 4, &[
            1.0, 0.6, 0.0, 0.0, //
            0.6, 2.0, 0.0, 0.0, //
            0.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, 1.0,
        ]);
        let b = GaussianBelief::from_parts(2, DVector::from_vec(vec![0.1, 0.2, 0.0, 0.0]), cov, 0.5).unwrap();
        assert!(!b.is_diagonal());
        let post = b.condition(0, 1.1).unwrap();
        let shift = 0.6 / (1.0 + 0.5) * (1.1 - 0.1);
        assert_relative_eq!(post.mean()[1], 0.2 + shift, epsilon = 1e-12);
        assert_relative_eq!(post.marginal_variance(1), 2.0 - 0.36 / 1.5, epsilon = 1e-12);
        assert_eq!(post.mean()[2], 0.0);
    }

    #[test]
    fn zero_covariance_returns_mean() {
        let mean = DVector::from_vec(vec![0.1, 0.2, 0.3, 0.4]);
        let b = GaussianBelief::from_parts(2, mean.clone(), DMatrix::zeros(4, 4), 0.5).unwrap();
        let m = b.sample_payoff(&mut substream(1, &[])).unwrap();
        assert_eq!(m.values(), mean.as_slice());
    }

    #[test]
    fn block_kernel_structure() {
        let spec = KernelSpec::BlockAntisymmetric {
            n_good: 3,
            n_bad: 5,
            mean: 0.5,
            scale_divisor: 500.0,
            rule: BlockRule::WithinBlock,
        };
        let b = GaussianBelief::prior(&spec, 64, 0.5).unwrap();
        let l = b.layout();
        let c = b.covariance();
        // good-vs-bad entries move together and against their transposes
        assert!(c[(l.index(0, 4), l.index(1, 6))] > 0.0);
        assert!(c[(l.index(0, 4), l.index(4, 0))] < 0.0);
        // anti-symmetric pairs inside the good block
        assert!(c[(l.index(0, 1), l.index(1, 0))] < 0.0);
        // self-play entries carry no uncertainty
        assert_eq!(c[(l.index(2, 2), l.index(2, 2))], 0.0);
        assert!(b.sampler().is_ok());
    }

    #[test]
    fn literal_block_kernel_pins_good_block() {
        let c = block_antisymmetric_covariance(3, 5, 500.0, BlockRule::Literal);
        let l = EntryLayout::new(8);
        assert_eq!(c[(l.index(0, 1), l.index(0, 1))], 0.0);
        assert!(c[(l.index(0, 5), l.index(0, 5))] > 0.0);
    }
}
