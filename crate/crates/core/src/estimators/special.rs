use statrs::function::gamma;

/// `ln Γ(x)` for `x > 0`, shifted away from the pole for small arguments.
pub(crate) fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        gamma::ln_gamma(x + 1.0) - x.ln()
    } else {
        gamma::ln_gamma(x)
    }
}

pub(crate) fn digamma(x: f64) -> f64 {
    gamma::digamma(x)
}

/// `ψ₁(x)` for `x > 0`: recurrence up to `x ≥ 10`, then the asymptotic series.
pub fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    acc + inv
        + 0.5 * inv2
        + inv * inv2 * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 * (1.0 / 30.0 - inv2 * 5.0 / 66.0))))
}
