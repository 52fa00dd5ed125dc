//! Standard normal functions and moments of the positive part of a shifted
//! normal variable.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

#[inline]
pub fn pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

#[inline]
pub fn cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

/// Moments of `X = s (Y + d)^+` for a standard normal `Y`, i.e. the surplus
/// of an order whose mean sits `d` standard deviations `s` on the executable
/// side of the price.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PositivePart {
    /// `P(X > 0)`
    pub prob: f64,
    /// `E[X]`
    pub mean: f64,
    /// `E[X^2]`
    pub mean_sq: f64,
    /// density of the order price at the threshold, `pdf(d) / s`
    pub density: f64,
    /// `E[X Y]`
    pub mean_times_shock: f64,
    /// `E[X^2 Y]`
    pub mean_sq_times_shock: f64,
    /// `E[1{X > 0} Y]`
    pub prob_times_shock: f64,
}

impl PositivePart {
    pub fn new(d: f64, s: f64) -> Self {
        let q = cdf(d);
        let phi = pdf(d);
        Self {
            prob: q,
            mean: s * (phi + d * q),
            mean_sq: s * s * ((d * d + 1.0) * q + d * phi),
            density: phi / s,
            mean_times_shock: s * q,
            mean_sq_times_shock: 2.0 * s * s * (phi + d * q),
            prob_times_shock: phi,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson quadrature of `g(y) pdf(y)` over [a, 12].
    fn expect_from(a: f64, g: impl Fn(f64) -> f64) -> f64 {
        let n = 200_000;
        let b = 12.0;
        let h = (b - a) / n as f64;
        let mut acc = 0.0;
        for i in 0..=n {
            let y = a + i as f64 * h;
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += w * g(y) * pdf(y);
        }
        acc * h / 3.0
    }

    #[test]
    fn cdf_reference_values() {
        assert!((cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert!((cdf(-3.0) - 0.001_349_898_031_630_094_6).abs() < 1e-17);
        assert!(cdf(-40.0) >= 0.0);
    }

    #[test]
    fn positive_part_matches_quadrature() {
        for &(d, s) in &[(0.5, 1.0), (-0.7, 2.0), (1.8, 0.5), (-2.5, 1.3)] {
            let pp = PositivePart::new(d, s);
            // every integrand vanishes below y = -d and is smooth above it
            let expect = |g: &dyn Fn(f64) -> f64| expect_from(-d, g);
            let x = |y: f64| s * (y + d);
            let ind = |_: f64| 1.0;
            let tol = 1e-9;
            assert!((pp.prob - expect(&ind)).abs() < tol);
            assert!((pp.mean - expect(&x)).abs() < tol);
            assert!((pp.mean_sq - expect(&|y| x(y).powi(2))).abs() < tol);
            assert!((pp.mean_times_shock - expect(&|y| x(y) * y)).abs() < tol);
            assert!((pp.mean_sq_times_shock - expect(&|y| x(y).powi(2) * y)).abs() < tol);
            assert!((pp.prob_times_shock - expect(&|y| ind(y) * y)).abs() < tol);
        }
    }
}
