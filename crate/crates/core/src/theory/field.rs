//! Drift and noise covariance of the attraction differences
//! `(A_1 - A_2, A_1 - A_3)` of a single agent in a three-market system.
//!
//! In rescaled time `t = n r` the differences follow
//! `dx = mu(x) dt + sqrt(r) Sigma(x)^{1/2} dW` with
//!
//! ```text
//! mu_2 = P_1 p_1 - P_2 p_2 - x_2
//! mu_3 = P_1 p_1 - P_3 p_3 - x_3
//! ```
//!
//! where `P_m` is the mean payoff at market m and `p_m` the logit choice
//! probability at `x`. `Sigma` is the second moment of the per-round
//! increment `S_1 1{m=1} - S_m 1{chosen m} - x_m`, scaled by `1/r^2`.

use crate::auction::{MarketSpec, OrderDistribution};
use crate::error::{invalid, Result};
use crate::learning::TraderClassSpec;
use crate::linalg::{Mat2, Vec2};

use super::moments::{payoff_moments, PayoffMoments};

/// A two-dimensional diffusion with state-dependent drift and covariance.
pub trait LangevinField: Sync {
    fn drift(&self, x: Vec2) -> Vec2;

    fn covariance(&self, x: Vec2) -> Mat2;

    /// `J[i][j] = d mu_i / d x_j`, central differences unless overridden.
    fn drift_jacobian(&self, x: Vec2) -> Mat2 {
        fd_jacobian(|y| self.drift(y), x, 1e-6)
    }

    /// `G[j] = d Sigma / d x_j`, central differences unless overridden.
    fn covariance_gradient(&self, x: Vec2) -> [Mat2; 2] {
        let h = 1e-6;
        let mut out = [[[0.0; 2]; 2]; 2];
        for (j, g) in out.iter_mut().enumerate() {
            let mut up = x;
            let mut dn = x;
            up[j] += h;
            dn[j] -= h;
            let (a, b) = (self.covariance(up), self.covariance(dn));
            for r in 0..2 {
                for c in 0..2 {
                    g[r][c] = (a[r][c] - b[r][c]) / (2.0 * h);
                }
            }
        }
        out
    }
}

pub fn fd_jacobian(f: impl Fn(Vec2) -> Vec2, x: Vec2, h: f64) -> Mat2 {
    let mut j = [[0.0; 2]; 2];
    for c in 0..2 {
        let mut up = x;
        let mut dn = x;
        up[c] += h;
        dn[c] -= h;
        let (a, b) = (f(up), f(dn));
        for r in 0..2 {
            j[r][c] = (a[r] - b[r]) / (2.0 * h);
        }
    }
    j
}

/// Drift field of one trader class for fixed market aggregates.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftField {
    pub beta: f64,
    pub moments: [PayoffMoments; 3],
}

impl DriftField {
    /// Field for `class` facing three markets with buyer-to-seller ratios `f`.
    pub fn new(
        class: &TraderClassSpec,
        markets: &[MarketSpec],
        f: &[f64],
        dist: &OrderDistribution,
    ) -> Result<Self> {
        if markets.len() != 3 || f.len() != 3 {
            return Err(invalid(format!(
                "drift field is defined for three markets, got {} markets and {} aggregates",
                markets.len(),
                f.len()
            )));
        }
        let mut moments = [PayoffMoments::default(); 3];
        for m in 0..3 {
            moments[m] = payoff_moments(class, &markets[m], f[m], dist)?;
        }
        Ok(Self {
            beta: class.beta,
            moments,
        })
    }

    pub fn from_moments(beta: f64, moments: [PayoffMoments; 3]) -> Self {
        Self { beta, moments }
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        Self {
            beta,
            moments: self.moments,
        }
    }

    /// Field with markets permuted: market `m` of the result is market
    /// `perm[m]` of `self`.
    pub fn permuted(&self, perm: [usize; 3]) -> Self {
        Self {
            beta: self.beta,
            moments: [self.moments[perm[0]], self.moments[perm[1]], self.moments[perm[2]]],
        }
    }

    /// Largest mean payoff over the markets.
    pub fn max_payoff(&self) -> f64 {
        self.moments.iter().map(|m| m.mean.abs()).fold(0.0, f64::max)
    }

    /// Logit probabilities at attraction differences `x`.
    pub fn choice_probabilities(&self, x: Vec2) -> [f64; 3] {
        // attractions relative to market 1: (0, -x_2, -x_3)
        let z = [0.0, -self.beta * x[0], -self.beta * x[1]];
        let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e = [(z[0] - max).exp(), (z[1] - max).exp(), (z[2] - max).exp()];
        let s = e[0] + e[1] + e[2];
        [e[0] / s, e[1] / s, e[2] / s]
    }

    /// `dp_m / dx_j`
    fn probability_gradient(&self, p: &[f64; 3]) -> [[f64; 2]; 3] {
        let mut g = [[0.0; 2]; 3];
        for m in 0..3 {
            for j in 0..2 {
                let delta = if m == j + 1 { 1.0 } else { 0.0 };
                g[m][j] = -self.beta * p[m] * (delta - p[j + 1]);
            }
        }
        g
    }

    fn weighted(&self, p: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
        let pm = &self.moments;
        (
            [pm[0].mean * p[0], pm[1].mean * p[1], pm[2].mean * p[2]],
            [pm[0].mean_sq * p[0], pm[1].mean_sq * p[1], pm[2].mean_sq * p[2]],
        )
    }
}

impl LangevinField for DriftField {
    fn drift(&self, x: Vec2) -> Vec2 {
        let p = self.choice_probabilities(x);
        let (g, _) = self.weighted(&p);
        [g[0] - g[1] - x[0], g[0] - g[2] - x[1]]
    }

    fn covariance(&self, x: Vec2) -> Mat2 {
        let p = self.choice_probabilities(x);
        let (g, h) = self.weighted(&p);
        let (a, b) = (x[0], x[1]);
        let s22 = h[0] + h[1] - 2.0 * a * (g[0] - g[1]) + a * a;
        let s33 = h[0] + h[2] - 2.0 * b * (g[0] - g[2]) + b * b;
        let s23 = h[0] - b * (g[0] - g[1]) - a * (g[0] - g[2]) + a * b;
        [[s22, s23], [s23, s33]]
    }

    fn drift_jacobian(&self, x: Vec2) -> Mat2 {
        let p = self.choice_probabilities(x);
        let dp = self.probability_gradient(&p);
        let pm = &self.moments;
        let mut j = [[0.0; 2]; 2];
        for c in 0..2 {
            let dg0 = pm[0].mean * dp[0][c];
            j[0][c] = dg0 - pm[1].mean * dp[1][c] - if c == 0 { 1.0 } else { 0.0 };
            j[1][c] = dg0 - pm[2].mean * dp[2][c] - if c == 1 { 1.0 } else { 0.0 };
        }
        j
    }

    fn covariance_gradient(&self, x: Vec2) -> [Mat2; 2] {
        let p = self.choice_probabilities(x);
        let dp = self.probability_gradient(&p);
        let (g, _) = self.weighted(&p);
        let pm = &self.moments;
        let (a, b) = (x[0], x[1]);
        let mut out = [[[0.0; 2]; 2]; 2];
        for (c, d) in out.iter_mut().enumerate() {
            let dg = [pm[0].mean * dp[0][c], pm[1].mean * dp[1][c], pm[2].mean * dp[2][c]];
            let dh = [
                pm[0].mean_sq * dp[0][c],
                pm[1].mean_sq * dp[1][c],
                pm[2].mean_sq * dp[2][c],
            ];
            let da = if c == 0 { 1.0 } else { 0.0 };
            let db = if c == 1 { 1.0 } else { 0.0 };
            let s22 = dh[0] + dh[1] - 2.0 * da * (g[0] - g[1]) - 2.0 * a * (dg[0] - dg[1])
                + 2.0 * a * da;
            let s33 = dh[0] + dh[2] - 2.0 * db * (g[0] - g[2]) - 2.0 * b * (dg[0] - dg[2])
                + 2.0 * b * db;
            let s23 = dh[0] - db * (g[0] - g[1]) - b * (dg[0] - dg[1]) - da * (g[0] - g[2])
                - a * (dg[0] - dg[2])
                + da * b
                + db * a;
            *d = [[s22, s23], [s23, s33]];
        }
        out
    }
}

/// Drift at attraction differences `delta` for a class at aggregates `f`.
pub fn drift(
    delta: Vec2,
    f: &[f64],
    class: &TraderClassSpec,
    markets: &[MarketSpec],
    dist: &OrderDistribution,
) -> Result<Vec2> {
    Ok(DriftField::new(class, markets, f, dist)?.drift(delta))
}

/// Noise covariance at attraction differences `delta`.
pub fn covariance(
    delta: Vec2,
    f: &[f64],
    class: &TraderClassSpec,
    markets: &[MarketSpec],
    dist: &OrderDistribution,
) -> Result<Mat2> {
    Ok(DriftField::new(class, markets, f, dist)?.covariance(delta))
}

/// Linear test field `mu = -k x` with constant isotropic covariance `s I`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearField {
    pub k: f64,
    pub s: f64,
}

impl LangevinField for LinearField {
    fn drift(&self, x: Vec2) -> Vec2 {
        [-self.k * x[0], -self.k * x[1]]
    }

    fn covariance(&self, _x: Vec2) -> Mat2 {
        [[self.s, 0.0], [0.0, self.s]]
    }

    fn drift_jacobian(&self, _x: Vec2) -> Mat2 {
        [[-self.k, 0.0], [0.0, -self.k]]
    }

    fn covariance_gradient(&self, _x: Vec2) -> [Mat2; 2] {
        [[[0.0; 2]; 2]; 2]
    }
}
