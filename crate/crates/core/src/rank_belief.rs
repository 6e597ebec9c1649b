//! Empirical belief over α-ranks induced by a payoff distribution.

use std::collections::BTreeMap;

use crate::alpharank::{l1, AlphaRank, RankSolver};
use crate::belief::{BeliefSampler, GaussianBelief};
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::rng::{substream, StreamRng};

/// Decimal places used for atom identity in the probability graphs.
pub const GRAPH_PRECISION: u32 = 3;
/// Decimal places used by the binning entropy estimator.
pub const BINNING_PRECISION: u32 = 2;

const CHUNK: usize = 64;

/// Anything that can produce payoff matrices (row-major `S × S`).
pub trait PayoffDistribution: Sync {
    fn size(&self) -> usize;
    fn draw(&self, rng: &mut StreamRng, out: &mut [f64]);
}

pub struct GaussianDistribution {
    size: usize,
    sampler: BeliefSampler,
}

impl GaussianDistribution {
    pub fn new(belief: &GaussianBelief) -> Result<Self> {
        Ok(Self {
            size: belief.size(),
            sampler: belief.sampler()?,
        })
    }
}

impl PayoffDistribution for GaussianDistribution {
    fn size(&self) -> usize {
        self.size
    }

    fn draw(&self, rng: &mut StreamRng, out: &mut [f64]) {
        self.sampler.draw(rng, out)
    }
}

/// Samples `r_i = f(m_i)` stored row-major, one α-rank per row.
#[derive(Clone, Debug, PartialEq)]
pub struct RankSampleSet {
    dim: usize,
    data: Vec<f64>,
    epsilon: f64,
    precision: u32,
}

/// A rounded atom with its multiplicity and the first sample that fell into it.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub key: Vec<i64>,
    pub count: usize,
    pub representative: usize,
}

impl Atom {
    pub fn rounded(&self, decimal_places: u32) -> Vec<f64> {
        let scale = 10f64.powi(decimal_places as i32);
        self.key.iter().map(|&k| k as f64 / scale).collect()
    }
}

impl RankSampleSet {
    pub fn from_samples(samples: &[Vec<f64>], epsilon: f64) -> Result<Self> {
        let dim = samples.first().map(Vec::len).ok_or_else(|| Error::invalid("rank sample set is empty"))?;
        let mut data = Vec::with_capacity(dim * samples.len());
        for s in samples {
            if s.len() != dim {
                return Err(Error::shape(dim, s.len()));
            }
            let total: f64 = s.iter().sum();
            if s.iter().any(|&p| !(p >= 0.0)) || (total - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!("{s:?} is not a point on the simplex")));
            }
            data.extend_from_slice(s);
        }
        Ok(Self {
            dim,
            data,
            epsilon,
            precision: GRAPH_PRECISION,
        })
    }

    pub fn with_precision(mut self, decimal_places: u32) -> Self {
        self.precision = decimal_places;
        self
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.dim)
    }

    /// Histogram over samples rounded to `decimal_places`, in lexicographic
    /// order of the rounded vectors.
    pub fn aggregate(&self, decimal_places: u32) -> Vec<Atom> {
        let scale = 10f64.powi(decimal_places as i32);
        let mut map: BTreeMap<Vec<i64>, (usize, usize)> = BTreeMap::new();
        for (i, s) in self.iter().enumerate() {
            let key: Vec<i64> = s.iter().map(|&p| (p * scale).round() as i64).collect();
            map.entry(key).or_insert((0, i)).0 += 1;
        }
        map.into_iter()
            .map(|(key, (count, representative))| Atom {
                key,
                count,
                representative,
            })
            .collect()
    }

    /// Most frequent atom at the set's precision; ties go to the
    /// lexicographically smallest rounded vector. Returns the first sample in it.
    pub fn mode(&self) -> AlphaRank {
        let atoms = self.aggregate(self.precision);
        let best = atoms
            .iter()
            .fold(None::<&Atom>, |best, a| match best {
                Some(b) if b.count >= a.count => Some(b),
                _ => Some(a),
            })
            .expect("rank sample set is never empty");
        AlphaRank::new(self.sample(best.representative).to_vec()).expect("samples are simplex points")
    }

    /// Fraction of samples within L1 distance `tol` of `target`.
    pub fn prob_of(&self, target: &[f64], tol: f64) -> f64 {
        let hits = self.iter().filter(|s| l1(s, target) < tol).count();
        hits as f64 / self.len() as f64
    }

    /// Distinct exact sample vectors with their counts, in a deterministic order.
    pub fn exact_atoms(&self) -> Vec<(Vec<f64>, usize)> {
        let mut map: BTreeMap<Vec<u64>, usize> = BTreeMap::new();
        for s in self.iter() {
            *map.entry(s.iter().map(|p| p.to_bits()).collect()).or_insert(0) += 1;
        }
        map.into_iter()
            .map(|(k, c)| (k.into_iter().map(f64::from_bits).collect(), c))
            .collect()
    }
}

/// Draw `n` α-ranks `f(m_i)`, `m_i ∼ dist`. Draw `i` uses the substream
/// `(seed, i)` so the set does not depend on scheduling.
pub fn sample_ranks_from<D: PayoffDistribution + ?Sized>(
    dist: &D,
    n: usize,
    epsilon: f64,
    seed: u64,
    mode: Execution,
) -> Result<RankSampleSet> {
    if n == 0 {
        return Err(Error::invalid("need at least one rank sample"));
    }
    let s = dist.size();
    // One chunk when sequential so the solver's pattern cache spans every draw.
    let chunk = if mode.is_parallel() { CHUNK } else { n };
    let chunks = n.div_ceil(chunk);
    let parts = par::try_map_indexed(mode, chunks, |c| -> Result<Vec<f64>> {
        let mut solver = RankSolver::new(s, epsilon)?;
        let mut payoff = vec![0.0; s * s];
        let lo = c * chunk;
        let hi = ((c + 1) * chunk).min(n);
        let mut out = vec![0.0; (hi - lo) * s];
        for (k, i) in (lo..hi).enumerate() {
            let dst = &mut out[k * s..(k + 1) * s];
            dist.draw(&mut substream(seed, &[i as u64]), &mut payoff);
            if solver.solve_into(&payoff, dst).is_err() {
                dist.draw(&mut substream(seed, &[i as u64, 1]), &mut payoff);
                solver.solve_into(&payoff, dst)?;
            }
        }
        Ok(out)
    })?;
    Ok(RankSampleSet {
        dim: s,
        data: parts.concat(),
        epsilon,
        precision: GRAPH_PRECISION,
    })
}

pub fn sample_ranks(belief: &GaussianBelief, n: usize, epsilon: f64, seed: u64, mode: Execution) -> Result<RankSampleSet> {
    sample_ranks_from(&GaussianDistribution::new(belief)?, n, epsilon, seed, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alpharank::alpha_rank;
    use crate::belief::KernelSpec;
    use nalgebra::{DMatrix, DVector};

    fn set(samples: &[Vec<f64>]) -> RankSampleSet {
        RankSampleSet::from_samples(samples, 1e-6).unwrap()
    }

    #[test]
    fn degenerate_belief_gives_identical_samples() {
        let mean = DVector::from_vec(vec![0.5, 0.45, 1.0, 1.0, 0.55, 0.5, 1.0, 1.0, 0.0, 0.0, 0.5, 0.5, 0.0, 0.0, 0.5, 0.5]);
        let b = GaussianBelief::from_parts(4, mean, DMatrix::zeros(16, 16), 0.5).unwrap();
        let r = sample_ranks(&b, 50, 1e-6, 3, Execution::Sequential).unwrap();
        let expected = alpha_rank(&b.posterior_mean(), 1e-6).unwrap();
        assert!(r.iter().all(|s| s == expected.probabilities()));
        assert_eq!(sample_ranks(&b, 1, 1e-6, 3, Execution::Sequential).unwrap().len(), 1);
        assert!(sample_ranks(&b, 0, 1e-6, 3, Execution::Sequential).is_err());
    }

    #[test]
    fn deterministic_and_schedule_independent() {
        let b = GaussianBelief::prior(&KernelSpec::Independent { mean: 0.5, variance: 1.0 }, 16, 0.5).unwrap();
        let a = sample_ranks(&b, 300, 1e-6, 11, Execution::Parallel).unwrap();
        let c = sample_ranks(&b, 300, 1e-6, 11, Execution::Sequential).unwrap();
        assert_eq!(a, c);
        assert_ne!(a, sample_ranks(&b, 300, 1e-6, 12, Execution::Sequential).unwrap());
    }

    #[test]
    fn aggregate_rounding() {
        let s = set(&[vec![0.333333, 0.666667], vec![0.333334, 0.666666], vec![1.0, 0.0]]);
        let atoms = s.aggregate(3);
        assert_eq!(atoms.len(), 2);
        assert_eq!(atoms[0].rounded(3), vec![0.333, 0.667]);
        assert_eq!(atoms[0].count, 2);
        assert_eq!(atoms.iter().map(|a| a.count).sum::<usize>(), 3);
    }

    #[test]
    fn mode_and_probability() {
        let a = vec![0.0, 1.0];
        let b = vec![1.0, 0.0];
        let mut samples = vec![a.clone(); 6];
        samples.extend(vec![b.clone(); 4]);
        let s = set(&samples);
        assert_eq!(s.mode().probabilities(), a.as_slice());
        assert_eq!(s.prob_of(&a, 0.01), 0.6);
        assert_eq!(s.prob_of(&[0.5, 0.5], 0.01), 0.0);
        // equal counts: lexicographically smallest rounded vector wins
        let tied = set(&[b.clone(), a.clone()]);
        assert_eq!(tied.mode().probabilities(), a.as_slice());
    }

    #[test]
    fn exact_atoms_group_identical_vectors() {
        let s = set(&[vec![0.25, 0.75], vec![0.25, 0.75], vec![0.5, 0.5]]);
        let atoms = s.exact_atoms();
        assert_eq!(atoms.len(), 2);
        assert_eq!(atoms.iter().map(|a| a.1).sum::<usize>(), 3);
    }
}
