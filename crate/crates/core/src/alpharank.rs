//! α-rank: response-graph Markov chains and their stationary distributions.

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::payoff::{PayoffMatrix, PayoffTensor};

/// Perturbation used by the experiments for the infinite-α single-population chain.
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Chains with at most this many states are solved directly.
pub const DIRECT_SOLVE_MAX_STATES: usize = 64;
pub const POWER_TOLERANCE: f64 = 1e-12;
pub const POWER_MAX_ITERATIONS: usize = 1_000_000;
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Row-stochastic transition matrix over strategy profiles (row-major).
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMatrix {
    n: usize,
    data: Vec<f64>,
}

impl TransitionMatrix {
    /// Wrap a row-major matrix after checking it is row-stochastic.
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || data.len() != n * n {
            return Err(Error::shape(format!("{n}x{n}"), data.len()));
        }
        if data.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::invalid("transition probabilities must lie in [0, 1]"));
        }
        for (i, row) in data.chunks(n).enumerate() {
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::invalid(format!("row {i} sums to {s}")));
            }
        }
        Ok(Self { n, data })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.data[from * self.n + to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.data[from * self.n..(from + 1) * self.n]
    }

    /// `‖x C − x‖_∞`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let n = self.n;
        (0..n)
            .map(|j| {
                let xc: f64 = (0..n).map(|i| x[i] * self.data[i * n + j]).sum();
                (xc - x[j]).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Stationary distribution of the α-rank chain.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaRank(Vec<f64>);

impl AlphaRank {
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() || probabilities.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::invalid("α-rank entries must be nonnegative"));
        }
        let s: f64 = probabilities.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("α-rank sums to {s}")));
        }
        Ok(Self(probabilities))
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn l1_distance(&self, other: &[f64]) -> f64 {
        l1(&self.0, other)
    }
}

#[inline]
pub(crate) fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// `(1 - e^{-αΔ}) / (1 - e^{-αmΔ})`, evaluated so that no intermediate overflows.
fn fixation_ratio(alpha: f64, m: u32, diff: f64) -> f64 {
    let m = f64::from(m);
    let x = alpha * diff;
    if diff == 0.0 || x == 0.0 {
        return 1.0 / m;
    }
    if x > 0.0 {
        (-x).exp_m1() / (-m * x).exp_m1()
    } else {
        let y = -x;
        (-(m - 1.0) * y).exp() * ((-y).exp_m1() / (-m * y).exp_m1())
    }
}

fn check_alpha(alpha: f64, m: u32) -> Result<()> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::invalid(format!("alpha must be finite and nonnegative, got {alpha}")));
    }
    if m == 0 {
        return Err(Error::invalid("population size m must be at least 1"));
    }
    Ok(())
}

fn close_rows(n: usize, data: &mut [f64]) {
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| data[i * n + j]).sum();
        data[i * n + i] = (1.0 - off).max(0.0);
    }
}

/// Finite-α multi-population chain over all strategy profiles.
pub fn build_transition_finite_alpha(payoffs: &PayoffTensor, alpha: f64, m: u32) -> Result<TransitionMatrix> {
    check_alpha(alpha, m)?;
    let k = payoffs.num_players();
    if k < 2 {
        return Err(Error::invalid("the multi-population chain needs at least two players"));
    }
    let deviations: usize = payoffs.strategies().iter().map(|s| s - 1).sum();
    if deviations == 0 {
        return Err(Error::invalid("every player has a single strategy"));
    }
    let eta = 1.0 / deviations as f64;
    let n = payoffs.profile_count();
    let mut data = vec![0.0; n * n];
    for sigma in 0..n {
        let coords = payoffs.profile_coords(sigma);
        for player in 0..k {
            let mut dev = coords.clone();
            for s in 0..payoffs.strategies()[player] {
                if s == coords[player] {
                    continue;
                }
                dev[player] = s;
                let tau = payoffs.profile_index(&dev);
                let diff = payoffs.payoff(tau, player) - payoffs.payoff(sigma, player);
                data[sigma * n + tau] = eta * fixation_ratio(alpha, m, diff);
            }
        }
    }
    close_rows(n, &mut data);
    Ok(TransitionMatrix { n, data })
}

/// Finite-α single-population chain: `τ` invades `σ` with fitness
/// difference `M(τ, σ) − M(σ, τ)`.
pub fn build_transition_single_pop_finite_alpha(payoffs: &PayoffMatrix, alpha: f64, m: u32) -> Result<TransitionMatrix> {
    check_alpha(alpha, m)?;
    let s = payoffs.size();
    if s < 2 {
        return Err(Error::invalid("single-population chain needs at least two strategies"));
    }
    let eta = 1.0 / (s - 1) as f64;
    let mut data = vec![0.0; s * s];
    for sigma in 0..s {
        for tau in (0..s).filter(|&t| t != sigma) {
            let diff = payoffs.get(tau, sigma) - payoffs.get(sigma, tau);
            data[sigma * s + tau] = eta * fixation_ratio(alpha, m, diff);
        }
    }
    close_rows(s, &mut data);
    Ok(TransitionMatrix { n: s, data })
}

fn fill_single_pop(values: &[f64], s: usize, epsilon: f64, data: &mut [f64]) {
    let eta = 1.0 / (s - 1) as f64;
    let (win, lose, tie) = (eta * (1.0 - epsilon), eta * epsilon, 0.5 * eta);
    for sigma in 0..s {
        let mut off = 0.0;
        for tau in 0..s {
            if tau == sigma {
                continue;
            }
            let invader = values[tau * s + sigma];
            let resident = values[sigma * s + tau];
            let p = if invader > resident {
                win
            } else if invader < resident {
                lose
            } else {
                tie
            };
            data[sigma * s + tau] = p;
            off += p;
        }
        data[sigma * s + sigma] = 1.0 - off;
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::invalid(format!("epsilon must lie in (0, 0.5), got {epsilon}")));
    }
    Ok(())
}

/// Perturbed infinite-α single-population chain.
pub fn build_transition_single_pop(payoffs: &PayoffMatrix, epsilon: f64) -> Result<TransitionMatrix> {
    check_epsilon(epsilon)?;
    let s = payoffs.size();
    if s < 2 {
        return Err(Error::invalid("single-population chain needs at least two strategies"));
    }
    let mut data = vec![0.0; s * s];
    fill_single_pop(payoffs.values(), s, epsilon, &mut data);
    Ok(TransitionMatrix { n: s, data })
}

/// Solve `x (C − I) = 0`, `Σx = 1` by Gaussian elimination with partial
/// pivoting. `work` must hold `n * n` values and `x` receives the solution.
fn direct_solve(n: usize, chain: &[f64], work: &mut [f64], x: &mut [f64]) -> bool {
    // Row i of the system is column i of (C − I); the last row is replaced by ones.
    for i in 0..n {
        for j in 0..n {
            work[i * n + j] = if i == n - 1 {
                1.0
            } else {
                chain[j * n + i] - if i == j { 1.0 } else { 0.0 }
            };
        }
        x[i] = if i == n - 1 { 1.0 } else { 0.0 };
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| work[a * n + col].abs().total_cmp(&work[b * n + col].abs()))
            .unwrap_or(col);
        if work[pivot * n + col].abs() < 1e-300 {
            return false;
        }
        if pivot != col {
            for j in 0..n {
                work.swap(col * n + j, pivot * n + j);
            }
            x.swap(col, pivot);
        }
        let d = work[col * n + col];
        for r in col + 1..n {
            let f = work[r * n + col] / d;
            if f != 0.0 {
                for j in col..n {
                    work[r * n + j] -= f * work[col * n + j];
                }
                x[r] -= f * x[col];
            }
        }
    }
    for col in (0..n).rev() {
        let mut acc = x[col];
        for j in col + 1..n {
            acc -= work[col * n + j] * x[j];
        }
        x[col] = acc / work[col * n + col];
    }
    let mut total = 0.0;
    for v in x.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
        total += *v;
    }
    if !(total > 0.0 && total.is_finite()) {
        return false;
    }
    x.iter_mut().for_each(|v| *v /= total);
    true
}

/// Power iteration `x ← x C` from `init` until successive iterates differ by
/// less than `tol` in L1.
pub fn power_iteration(chain: &TransitionMatrix, init: &[f64], tol: f64, max_iter: usize) -> Result<AlphaRank> {
    let n = chain.n;
    if init.len() != n {
        return Err(Error::shape(n, init.len()));
    }
    let total: f64 = init.iter().sum();
    if init.iter().any(|&v| v < 0.0) || !(total > 0.0) {
        return Err(Error::invalid("initial vector must be a nonnegative, nonzero measure"));
    }
    let mut x: Vec<f64> = init.iter().map(|v| v / total).collect();
    let mut next = vec![0.0; n];
    for it in 0..max_iter {
        next.iter_mut().for_each(|v| *v = 0.0);
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (nj, &c) in next.iter_mut().zip(chain.row(i)) {
                *nj += xi * c;
            }
        }
        let s: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= s);
        let delta = l1(&x, &next);
        std::mem::swap(&mut x, &mut next);
        if delta < tol {
            let residual = chain.residual(&x);
            if residual <= RESIDUAL_TOLERANCE {
                return AlphaRank::new(x);
            }
            return Err(Error::SolverFailure { residual, iterations: it + 1 });
        }
    }
    Err(Error::SolverFailure {
        residual: chain.residual(&x),
        iterations: max_iter,
    })
}

/// Unique stationary distribution of an irreducible chain.
pub fn stationary_distribution(chain: &TransitionMatrix) -> Result<AlphaRank> {
    let n = chain.n;
    if n == 1 {
        return AlphaRank::new(vec![1.0]);
    }
    let uniform = vec![1.0 / n as f64; n];
    if n > DIRECT_SOLVE_MAX_STATES {
        return power_iteration(chain, &uniform, POWER_TOLERANCE, POWER_MAX_ITERATIONS);
    }
    let mut work = vec![0.0; n * n];
    let mut x = vec![0.0; n];
    if !direct_solve(n, &chain.data, &mut work, &mut x) {
        return Err(Error::SolverFailure {
            residual: f64::INFINITY,
            iterations: 0,
        });
    }
    let residual = chain.residual(&x);
    if residual > RESIDUAL_TOLERANCE {
        return power_iteration(chain, &x, POWER_TOLERANCE, POWER_MAX_ITERATIONS);
    }
    AlphaRank::new(x)
}

/// Infinite-α single-population α-rank, the map `f` from payoff matrices to ranks.
pub fn alpha_rank(payoffs: &PayoffMatrix, epsilon: f64) -> Result<AlphaRank> {
    let chain = build_transition_single_pop(payoffs, epsilon)?;
    stationary_distribution(&chain)
}

/// Largest strategy count whose comparison pattern fits the cache key.
const PATTERN_KEY_MAX_STATES: usize = 11;
const PATTERN_CACHE_CAPACITY: usize = 1 << 16;

/// Reusable buffers for computing many single-population α-ranks of the same size.
///
/// The infinite-α chain depends only on the comparison pattern of the payoffs,
/// so solved ranks are memoised by pattern.
#[derive(Clone, Debug)]
pub struct RankSolver {
    size: usize,
    epsilon: f64,
    chain: Vec<f64>,
    work: Vec<f64>,
    cache: HashMap<u128, usize>,
    cached: Vec<f64>,
}

/// Two bits per pair `σ < τ`: invader wins, loses, or ties.
fn pattern_key(values: &[f64], s: usize) -> u128 {
    let mut key = 0u128;
    for sigma in 0..s {
        for tau in sigma + 1..s {
            let invader = values[tau * s + sigma];
            let resident = values[sigma * s + tau];
            let code = if invader > resident {
                0
            } else if invader < resident {
                1
            } else {
                2
            };
            key = (key << 2) | code;
        }
    }
    key
}

impl RankSolver {
    pub fn new(size: usize, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        if size < 2 {
            return Err(Error::invalid("single-population chain needs at least two strategies"));
        }
        Ok(Self {
            size,
            epsilon,
            chain: vec![0.0; size * size],
            work: vec![0.0; size * size],
            cache: HashMap::new(),
            cached: Vec::new(),
        })
    }

    /// Write `f(values)` into `out`. Same arithmetic as [`alpha_rank`].
    pub fn solve_into(&mut self, values: &[f64], out: &mut [f64]) -> Result<()> {
        let s = self.size;
        if values.len() != s * s || out.len() != s {
            return Err(Error::shape(s * s, values.len()));
        }
        if s > DIRECT_SOLVE_MAX_STATES {
            let m = PayoffMatrix::new(s, values.to_vec())?;
            out.copy_from_slice(alpha_rank(&m, self.epsilon)?.probabilities());
            return Ok(());
        }
        let key = (s <= PATTERN_KEY_MAX_STATES).then(|| pattern_key(values, s));
        if let Some(&slot) = key.as_ref().and_then(|k| self.cache.get(k)) {
            out.copy_from_slice(&self.cached[slot * s..(slot + 1) * s]);
            return Ok(());
        }
        self.solve_uncached(values, out)?;
        if let Some(k) = key {
            if self.cache.len() < PATTERN_CACHE_CAPACITY {
                self.cache.insert(k, self.cache.len());
                self.cached.extend_from_slice(out);
            }
        }
        Ok(())
    }

    fn solve_uncached(&mut self, values: &[f64], out: &mut [f64]) -> Result<()> {
        let s = self.size;
        fill_single_pop(values, s, self.epsilon, &mut self.chain);
        if !direct_solve(s, &self.chain, &mut self.work, out) {
            return Err(Error::SolverFailure {
                residual: f64::INFINITY,
                iterations: 0,
            });
        }
        let chain = TransitionMatrix {
            n: s,
            data: std::mem::take(&mut self.chain),
        };
        let residual = chain.residual(out);
        let fallback = if residual > RESIDUAL_TOLERANCE {
            Some(power_iteration(&chain, out, POWER_TOLERANCE, POWER_MAX_ITERATIONS))
        } else {
            None
        };
        self.chain = chain.data;
        if let Some(r) = fallback {
            out.copy_from_slice(r?.probabilities());
        }
        Ok(())
    }
}

/// Signs of every comparison `M(τ, σ)` vs `M(σ, τ)`, `σ < τ`, that enters the
/// single-population chain.
pub fn comparison_pattern(m: &PayoffMatrix) -> Vec<Ordering> {
    let s = m.size();
    let mut out = Vec::with_capacity(s * (s.saturating_sub(1)) / 2);
    for sigma in 0..s {
        for tau in sigma + 1..s {
            out.push(m.get(tau, sigma).total_cmp(&m.get(sigma, tau)));
        }
    }
    out
}

/// Whether two matrices induce the same infinite-α chain (the permutation property).
pub fn orderings_equal(m1: &PayoffMatrix, m2: &PayoffMatrix) -> Result<bool> {
    if m1.size() != m2.size() {
        return Err(Error::shape(m1.size(), m2.size()));
    }
    Ok(comparison_pattern(m1) == comparison_pattern(m2))
}
