use serde::{Deserialize, Serialize};

use super::special::{digamma, ln_gamma, trigamma};
use crate::error::{Error, Result};
use crate::rank_belief::{RankSampleSet, BINNING_PRECISION};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyEstimator {
    Binning,
    Nsb,
}

/// Entropy in nats.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyEstimate {
    pub value: f64,
    pub estimator: EntropyEstimator,
    pub atom_bound_used: Option<f64>,
}

/// `−Σ p̂ log p̂` of a histogram, summed in the given order.
pub fn plug_in_entropy(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    let h = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum::<f64>();
    h.max(0.0)
}

fn binned_counts(set: &RankSampleSet) -> Vec<usize> {
    set.aggregate(BINNING_PRECISION).into_iter().map(|a| a.count).collect()
}

/// Histogram entropy after rounding every coordinate to two decimals.
pub fn entropy_binning(set: &RankSampleSet) -> EntropyEstimate {
    EntropyEstimate {
        value: plug_in_entropy(&binned_counts(set)),
        estimator: EntropyEstimator::Binning,
        atom_bound_used: None,
    }
}

/// NSB estimate over the two-decimal atoms, with `atom_bound` as alphabet size.
pub fn entropy_nsb(set: &RankSampleSet, atom_bound: f64) -> Result<EntropyEstimate> {
    let counts = binned_counts(set);
    if !(atom_bound >= counts.len() as f64) {
        return Err(Error::invalid(format!(
            "atom bound {atom_bound} is below the {} observed atoms",
            counts.len()
        )));
    }
    Ok(EntropyEstimate {
        value: nsb_entropy_from_counts(&counts, atom_bound)?,
        estimator: EntropyEstimator::Nsb,
        atom_bound_used: Some(atom_bound),
    })
}

struct NsbModel<'a> {
    counts: &'a [usize],
    n: f64,
    k: f64,
}

impl NsbModel<'_> {
    /// Log of evidence × prior density × Jacobian, at `β = e^t`.
    fn log_weight(&self, t: f64) -> f64 {
        let beta = t.exp();
        let kb = self.k * beta;
        let mut ll = ln_gamma(kb) - ln_gamma(self.n + kb);
        let lg_beta = ln_gamma(beta);
        for &c in self.counts {
            ll += ln_gamma(c as f64 + beta) - lg_beta;
        }
        let dxi = self.k * trigamma(kb + 1.0) - trigamma(beta + 1.0);
        if !(dxi > 0.0) {
            return f64::NEG_INFINITY;
        }
        ll + dxi.ln() + t
    }

    /// Posterior-mean entropy given `β`.
    fn mean_entropy(&self, t: f64) -> f64 {
        let beta = t.exp();
        let total = self.n + self.k * beta;
        let observed: f64 = self
            .counts
            .iter()
            .map(|&c| {
                let a = c as f64 + beta;
                a * digamma(a + 1.0)
            })
            .sum();
        let unobserved = (self.k - self.counts.len() as f64) * beta * digamma(beta + 1.0);
        digamma(total + 1.0) - (observed + unobserved) / total
    }
}

const QUAD_REL_TOL: f64 = 1e-6;
const QUAD_MAX_DEPTH: u32 = 50;

struct Quad<'a, F: Fn(f64) -> (f64, f64)> {
    f: &'a F,
    tol: (f64, f64),
    failed: bool,
}

impl<F: Fn(f64) -> (f64, f64)> Quad<'_, F> {
    fn simpson(a: f64, fa: (f64, f64), m: (f64, f64), b: f64, fb: (f64, f64)) -> (f64, f64) {
        let h = (b - a) / 6.0;
        (h * (fa.0 + 4.0 * m.0 + fb.0), h * (fa.1 + 4.0 * m.1 + fb.1))
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse(&mut self, a: f64, fa: (f64, f64), b: f64, fb: (f64, f64), m: f64, fm: (f64, f64), whole: (f64, f64), tol: (f64, f64), depth: u32) -> (f64, f64) {
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = (self.f)(lm);
        let frm = (self.f)(rm);
        let left = Self::simpson(a, fa, flm, m, fm);
        let right = Self::simpson(m, fm, frm, b, fb);
        let err = (left.0 + right.0 - whole.0, left.1 + right.1 - whole.1);
        if err.0.abs() <= 15.0 * tol.0 && err.1.abs() <= 15.0 * tol.1 {
            return (left.0 + right.0 + err.0 / 15.0, left.1 + right.1 + err.1 / 15.0);
        }
        if depth >= QUAD_MAX_DEPTH {
            self.failed = true;
            return (left.0 + right.0, left.1 + right.1);
        }
        let half = (tol.0 / 2.0, tol.1 / 2.0);
        let l = self.recurse(a, fa, m, fm, lm, flm, left, half, depth + 1);
        let r = self.recurse(m, fm, b, fb, rm, frm, right, half, depth + 1);
        (l.0 + r.0, l.1 + r.1)
    }

    fn integrate(&mut self, a: f64, b: f64) -> (f64, f64) {
        if b <= a {
            return (0.0, 0.0);
        }
        let fa = (self.f)(a);
        let fb = (self.f)(b);
        let m = 0.5 * (a + b);
        let fm = (self.f)(m);
        let whole = Self::simpson(a, fa, fm, b, fb);
        let tol = self.tol;
        self.recurse(a, fa, b, fb, m, fm, whole, tol, 0)
    }
}

/// NSB entropy (nats) for a histogram over an alphabet of size `alphabet`.
///
/// The posterior over the Dirichlet concentration `β` is integrated in
/// `log β` by adaptive Simpson quadrature around its mode.
pub fn nsb_entropy_from_counts(counts: &[usize], alphabet: f64) -> Result<f64> {
    let counts: Vec<usize> = counts.iter().copied().filter(|&c| c > 0).collect();
    let n: usize = counts.iter().sum();
    if n == 0 {
        return Err(Error::invalid("NSB needs at least one sample"));
    }
    if !(alphabet >= counts.len() as f64 && alphabet >= 1.0 && alphabet.is_finite()) {
        return Err(Error::invalid(format!("alphabet size {alphabet} is below the observed atom count")));
    }
    let fallback = plug_in_entropy(&counts);
    if alphabet == 1.0 {
        return Ok(0.0);
    }
    let model = NsbModel {
        counts: &counts,
        n: n as f64,
        k: alphabet,
    };
    let t_lo = -alphabet.ln() - 30.0;
    let t_hi = 20.0;
    const GRID: usize = 1200;
    let step = (t_hi - t_lo) / GRID as f64;
    let grid: Vec<(f64, f64)> = (0..=GRID)
        .map(|i| {
            let t = t_lo + step * i as f64;
            (t, model.log_weight(t))
        })
        .collect();
    let (peak_idx, peak) = grid
        .iter()
        .enumerate()
        .filter(|(_, (_, w))| w.is_finite())
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(i, &(_, w))| (i, w))
        .ok_or(Error::Quadrature { fallback })?;
    let keep = |w: f64| w.is_finite() && w > peak - 60.0;
    let first = grid.iter().position(|&(_, w)| keep(w)).unwrap_or(peak_idx).saturating_sub(1);
    let last = (grid.iter().rposition(|&(_, w)| keep(w)).unwrap_or(peak_idx) + 1).min(GRID);
    let integrand = |t: f64| {
        let w = (model.log_weight(t) - peak).exp();
        if w == 0.0 || !w.is_finite() {
            (0.0, 0.0)
        } else {
            (w, w * model.mean_entropy(t))
        }
    };
    // Trapezoid estimate on the grid sets the absolute tolerance.
    let rough: (f64, f64) = grid[first..=last].iter().fold((0.0, 0.0), |acc, &(t, _)| {
        let v = integrand(t);
        (acc.0 + v.0 * step, acc.1 + v.1 * step)
    });
    let mut quad = Quad {
        f: &integrand,
        tol: (QUAD_REL_TOL * rough.0.max(f64::MIN_POSITIVE), QUAD_REL_TOL * rough.1.abs().max(f64::MIN_POSITIVE)),
        failed: false,
    };
    let t_peak = grid[peak_idx].0;
    let left = quad.integrate(grid[first].0, t_peak);
    let right = quad.integrate(t_peak, grid[last].0);
    let den = left.0 + right.0;
    let num = left.1 + right.1;
    if quad.failed || !(den > 0.0) || !num.is_finite() {
        return Err(Error::Quadrature { fallback });
    }
    Ok((num / den).clamp(0.0, alphabet.ln()))
}

/// Upper bound `2^{S^k · k(S−1)}` on the number of distinct α-ranks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RankCountBound {
    Exact(u64),
    /// The bound is `2^exponent`, too large for a `u64`.
    PowerOfTwo(u64),
}

impl RankCountBound {
    pub fn exponent(self) -> u64 {
        match self {
            RankCountBound::Exact(v) => u64::from(63 - v.leading_zeros()),
            RankCountBound::PowerOfTwo(e) => e,
        }
    }

    /// Value as a float (`+∞` beyond the `f64` range).
    pub fn as_f64(self) -> f64 {
        match self {
            RankCountBound::Exact(v) => v as f64,
            RankCountBound::PowerOfTwo(e) => 2f64.powf(e as f64),
        }
    }
}

pub fn rank_count_upper_bound(num_populations: u32, strategies: u64) -> Result<RankCountBound> {
    if num_populations == 0 || strategies == 0 {
        return Err(Error::invalid("populations and strategies must be positive"));
    }
    let k = u64::from(num_populations);
    let exponent = strategies
        .checked_pow(num_populations)
        .and_then(|rows| rows.checked_mul(k * (strategies - 1)))
        .ok_or_else(|| Error::invalid("rank-count exponent overflows u64"))?;
    Ok(if exponent <= 63 {
        RankCountBound::Exact(1u64 << exponent)
    } else {
        RankCountBound::PowerOfTwo(exponent)
    })
}
