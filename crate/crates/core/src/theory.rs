//! Closed-form entropy and regret-bound utilities.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// `h_b(p)` in nats, with `h_b(0) = h_b(1) = 0`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("probability {p} outside [0, 1]")));
    }
    let term = |q: f64| if q > 0.0 { -q * q.ln() } else { 0.0 };
    Ok(term(p) + term(1.0 - p))
}

/// Upper bound on the entropy of an `n`-outcome distribution in which one
/// outcome has probability `p`.
pub fn entropy_upper_bound(p: f64, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::invalid("entropy bound needs at least two outcomes"));
    }
    Ok(binary_entropy(p)? + (1.0 - p) * ((n - 1) as f64).ln())
}

/// Shannon entropy (nats) of a probability vector.
pub fn entropy(probabilities: &[f64]) -> f64 {
    probabilities.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TheoryParams {
    /// Separability `Δ`.
    pub delta_sep: f64,
    pub sigma_a2: f64,
    pub sigma_02: f64,
    pub n_entries: usize,
    pub prior_cov: DMatrix<f64>,
    /// `‖M⋆‖²`.
    pub m_star_norm2: f64,
}

impl Default for TheoryParams {
    fn default() -> Self {
        TheoryParams {
            delta_sep: 0.1,
            sigma_a2: 0.5,
            sigma_02: 1.0,
            n_entries: 16,
            prior_cov: DMatrix::identity(16, 16),
            m_star_norm2: 8.0,
        }
    }
}

impl TheoryParams {
    fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.delta_sep) || !positive(self.sigma_a2) || !positive(self.sigma_02) {
            return Err(Error::invalid("Δ, σ_A² and σ_0² must be positive"));
        }
        if !(self.m_star_norm2 >= 0.0) || self.n_entries == 0 {
            return Err(Error::invalid("‖M‖² must be nonnegative and N positive"));
        }
        let k = &self.prior_cov;
        if k.nrows() != self.n_entries || k.ncols() != self.n_entries {
            return Err(Error::shape(self.n_entries, format!("{}x{}", k.nrows(), k.ncols())));
        }
        Ok(())
    }

    /// `log det(I + K/σ_A²)`.
    pub fn log_det_gain(&self) -> Result<f64> {
        self.validate()?;
        let n = self.n_entries;
        let m = DMatrix::identity(n, n) + &self.prior_cov / self.sigma_a2;
        let chol = m
            .cholesky()
            .ok_or_else(|| Error::Factorization("I + K/σ_A² is not positive definite".into()))?;
        Ok(2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>())
    }

    fn numerator(&self, t: f64) -> f64 {
        let half_gap2 = (self.delta_sep / 2.0).powi(2);
        half_gap2 * (self.sigma_a2 + (t / self.n_entries as f64 - 1.0) * self.sigma_02) / (self.sigma_a2 * self.sigma_02)
            - 2.0 * self.sigma_02 * self.m_star_norm2
    }

    /// Query count above which the cube-root argument is positive.
    pub fn vacuous_threshold(&self) -> Result<f64> {
        self.validate()?;
        let half_gap2 = (self.delta_sep / 2.0).powi(2);
        let need = 2.0 * self.sigma_02 * self.m_star_norm2 * self.sigma_a2 * self.sigma_02 / half_gap2;
        Ok(self.n_entries as f64 * (1.0 + (need - self.sigma_a2) / self.sigma_02))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegretBound {
    pub t: u64,
    /// Exponent `g(T)` (may be positive in the vacuous regime).
    pub g: f64,
    /// `min(T·e^{g(T)}, 1)`.
    pub bound: f64,
    pub vacuous: bool,
}

/// Regret-bound exponent for the greedy payoff-information-gain policy.
pub fn regret_exponent_g(params: &TheoryParams, t: u64) -> Result<RegretBound> {
    if t == 0 {
        return Err(Error::invalid("T must be at least 1"));
    }
    let log_det = params.log_det_gain()?;
    let denom = 300.0 * 0.5 * log_det;
    if !(denom > 0.0) {
        return Err(Error::invalid(format!("degenerate prior: log det term {log_det} is not positive")));
    }
    let tf = t as f64;
    let arg = params.numerator(tf) / denom;
    let g = -arg.cbrt();
    let raw = tf * g.exp();
    let vacuous = arg <= 0.0 || !(raw < 1.0);
    Ok(RegretBound {
        t,
        g,
        bound: if vacuous { 1.0 } else { raw },
        vacuous,
    })
}

pub fn bound_curve(params: &TheoryParams, ts: &[u64]) -> Result<Vec<RegretBound>> {
    ts.iter().map(|&t| regret_exponent_g(params, t)).collect()
}

/// `scale · I`, the covariance of an independent prior.
pub fn scaled_identity(n: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::identity(n, n) * scale
}

/// `count` query counts spaced evenly in log scale over `[lo, hi]`.
pub fn log_grid(lo: u64, hi: u64, count: usize) -> Vec<u64> {
    if count <= 1 || hi <= lo {
        return vec![lo.max(1)];
    }
    let (a, b) = ((lo.max(1) as f64).ln(), (hi as f64).ln());
    let mut out: Vec<u64> = (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp().round() as u64)
        .collect();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn binary_entropy_values() {
        assert_relative_eq!(binary_entropy(0.5).unwrap(), 2f64.ln(), epsilon = 1e-15);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert_relative_eq!(binary_entropy(0.2).unwrap(), 0.500_402_423_538_188_4, epsilon = 1e-12);
        assert!(binary_entropy(1.1).is_err());
        assert!(binary_entropy(f64::NAN).is_err());
    }

    #[test]
    fn entropy_bound_tight_cases() {
        assert_eq!(entropy_upper_bound(1.0, 5).unwrap(), 0.0);
        assert_relative_eq!(entropy_upper_bound(0.5, 2).unwrap(), 2f64.ln(), epsilon = 1e-15);
        assert!(entropy_upper_bound(0.5, 1).is_err());
    }

    #[test]
    fn g_against_scalar_evaluation() {
        let p = TheoryParams::default();
        // log det(I + I/0.5) = 16 ln 3
        assert_relative_eq!(p.log_det_gain().unwrap(), 16.0 * 3f64.ln(), epsilon = 1e-12);
        let r = regret_exponent_g(&p, 1000).unwrap();
        let num = 0.0025 * (0.5 + (1000.0 / 16.0 - 1.0)) / 0.5 - 16.0;
        let expected = -(num / (150.0 * 16.0 * 3f64.ln())).cbrt();
        assert_relative_eq!(r.g, expected, epsilon = 1e-12);
        assert!(r.vacuous);
        assert_eq!(r.bound, 1.0);
    }

    #[test]
    fn threshold_separates_regimes() {
        let p = TheoryParams::default();
        let t0 = p.vacuous_threshold().unwrap();
        assert_relative_eq!(p.numerator(t0), 0.0, epsilon = 1e-9);
        assert!(p.numerator(t0 + 1.0) > 0.0);
        assert!(regret_exponent_g(&p, 10).unwrap().g > 0.0);
        assert!(regret_exponent_g(&p, (t0 as u64) * 4).unwrap().g < 0.0);
    }

    #[test]
    fn degenerate_prior_reported() {
        let p = TheoryParams {
            n_entries: 2,
            prior_cov: DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -1.0]),
            ..TheoryParams::default()
        };
        assert!(regret_exponent_g(&p, 10).is_err());
        assert!(regret_exponent_g(&TheoryParams::default(), 0).is_err());
    }

    #[test]
    fn grid_is_increasing() {
        let g = log_grid(1, 1_000_000, 25);
        assert_eq!(g[0], 1);
        assert_eq!(*g.last().unwrap(), 1_000_000);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }
}
