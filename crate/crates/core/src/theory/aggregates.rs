//! Market aggregates implied by class choice probabilities, and the
//! homogeneous-population dynamics in which every class is represented by a
//! single attraction-difference vector.

use crate::auction::{MarketSpec, OrderDistribution};
use crate::error::{invalid, Error, Result};
use crate::learning::TraderClassSpec;
use crate::linalg::{dist, Vec2};
use crate::simulate::Aggregates;

use super::field::{DriftField, LangevinField};

/// Buyer-to-seller ratio at every market:
/// `f_m = sum_c w_c P_c(m) p_b_c / sum_c w_c P_c(m) (1 - p_b_c)`, with `w_c`
/// the population share of class c. Markets nobody sells at are `None`.
pub fn aggregates_from_choice(
    probabilities: &[Vec<f64>],
    classes: &[TraderClassSpec],
    weights: &[f64],
) -> Result<Aggregates> {
    if probabilities.len() != classes.len() || weights.len() != classes.len() {
        return Err(invalid("one probability vector and weight per class required"));
    }
    let markets = probabilities.first().map_or(0, |p| p.len());
    let mut f = Vec::with_capacity(markets);
    for m in 0..markets {
        let mut buyers = 0.0;
        let mut sellers = 0.0;
        for ((p, c), w) in probabilities.iter().zip(classes).zip(weights) {
            buyers += w * p[m] * c.p_buy;
            sellers += w * p[m] * (1.0 - c.p_buy);
        }
        f.push(if sellers > 0.0 { Some(buyers / sellers) } else { None });
    }
    Ok(Aggregates { f, round: 0, t: 0.0 })
}

/// Maps a class-1 state onto the class-2 state under the exchange of markets
/// 1 and 3: `(A1-A2, A1-A3) -> (A3-A2, A3-A1)`.
pub fn mirror(x: Vec2) -> Vec2 {
    [x[0] - x[1], -x[1]]
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub deltas: Vec<Vec2>,
    pub f: Vec<f64>,
}

/// Three markets, a set of trader classes with population shares and the
/// order distribution: everything needed for the homogeneous dynamics.
#[derive(Clone, Debug, PartialEq)]
pub struct MarketSystem {
    pub markets: Vec<MarketSpec>,
    pub classes: Vec<TraderClassSpec>,
    pub weights: Vec<f64>,
    pub dist: OrderDistribution,
}

impl MarketSystem {
    pub fn new(
        markets: Vec<MarketSpec>,
        classes: Vec<TraderClassSpec>,
        weights: Vec<f64>,
        dist: OrderDistribution,
    ) -> Result<Self> {
        if markets.len() != 3 {
            return Err(invalid(format!(
                "the analytical layer is defined for three markets, got {}",
                markets.len()
            )));
        }
        if classes.is_empty() || classes.len() != weights.len() {
            return Err(invalid("one weight per class required"));
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(invalid("class weights must be positive"));
        }
        for m in &markets {
            m.validate()?;
        }
        for c in &classes {
            c.validate()?;
        }
        dist.validate()?;
        let total: f64 = weights.iter().sum();
        let weights = weights.iter().map(|w| w / total).collect();
        Ok(Self {
            markets,
            classes,
            weights,
            dist,
        })
    }

    /// Two equally sized classes.
    pub fn two_class(
        thetas: [f64; 3],
        p_buy: [f64; 2],
        beta: f64,
        r: f64,
        dist: OrderDistribution,
    ) -> Result<Self> {
        Self::new(
            MarketSpec::list(&thetas)?,
            vec![
                TraderClassSpec::new(p_buy[0], beta, r)?,
                TraderClassSpec::new(p_buy[1], beta, r)?,
            ],
            vec![0.5, 0.5],
            dist,
        )
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        let mut s = self.clone();
        for c in &mut s.classes {
            c.beta = beta;
        }
        s
    }

    /// True for `theta_1 = 1 - theta_3`, `theta_2 = 1/2`, two equal classes
    /// with `p_b` summing to one.
    pub fn is_exchange_symmetric(&self) -> bool {
        let t = |m: usize| self.markets[m].theta;
        self.classes.len() == 2
            && (t(0) + t(2) - 1.0).abs() < 1e-12
            && (t(1) - 0.5).abs() < 1e-12
            && (self.classes[0].p_buy + self.classes[1].p_buy - 1.0).abs() < 1e-12
            && (self.weights[0] - self.weights[1]).abs() < 1e-12
            && self.classes[0].beta == self.classes[1].beta
            && self.dist.sigma_ask == self.dist.sigma_bid
    }

    pub fn field(&self, class: usize, f: &[f64]) -> Result<DriftField> {
        DriftField::new(&self.classes[class], &self.markets, f, &self.dist)
    }

    pub fn fields(&self, f: &[f64]) -> Result<Vec<DriftField>> {
        (0..self.classes.len()).map(|c| self.field(c, f)).collect()
    }

    /// Aggregates when every agent of class c sits at `deltas[c]`.
    pub fn aggregates(&self, deltas: &[Vec2]) -> Result<Vec<f64>> {
        let probs: Vec<Vec<f64>> = deltas
            .iter()
            .zip(&self.classes)
            .map(|(x, c)| {
                DriftField::from_moments(c.beta, Default::default())
                    .choice_probabilities(*x)
                    .to_vec()
            })
            .collect();
        let agg = aggregates_from_choice(&probs, &self.classes, &self.weights)?;
        agg.f
            .iter()
            .enumerate()
            .map(|(m, f)| match f {
                Some(v) if *v > 0.0 => Ok(*v),
                _ => Err(invalid(format!("aggregate at market {} undefined", m + 1))),
            })
            .collect()
    }

    /// One explicit Euler step of length `dt` for every class.
    pub fn homogeneous_step(&self, deltas: &[Vec2], dt: f64) -> Result<(Vec<Vec2>, Vec<f64>)> {
        if !(dt > 0.0) {
            return Err(invalid(format!("step size must be positive: {dt}")));
        }
        let f = self.aggregates(deltas)?;
        let next = deltas
            .iter()
            .enumerate()
            .map(|(c, x)| {
                let mu = self.field(c, &f)?.drift(*x);
                Ok([x[0] + dt * mu[0], x[1] + dt * mu[1]])
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((next, f))
    }

    /// Euler trajectory up to time `t_end`, one sample per step.
    pub fn trajectory(&self, start: &[Vec2], dt: f64, t_end: f64) -> Result<Vec<TrajectoryPoint>> {
        let steps = (t_end / dt).round() as usize;
        let mut out = Vec::with_capacity(steps + 1);
        let mut x = start.to_vec();
        for n in 0..=steps {
            let f = self.aggregates(&x)?;
            out.push(TrajectoryPoint {
                t: n as f64 * dt,
                deltas: x.clone(),
                f,
            });
            if n < steps {
                x = self.homogeneous_step(&x, dt)?.0;
            }
        }
        Ok(out)
    }

    /// Self-consistent homogeneous state reached from all-zero attractions.
    ///
    /// The joint dynamics is integrated until it settles; the result is then
    /// polished by damped iteration `f <- (f + F(f)) / 2`, where `F` moves
    /// every class to its nearest fixed point at fixed aggregates.
    pub fn self_consistent(&self) -> Result<(Vec<Vec2>, Vec<f64>)> {
        if self.is_exchange_symmetric() {
            return self.symmetric_self_consistent();
        }
        self.self_consistent_general()
    }

    /// [`Self::self_consistent`] without the exchange-symmetry shortcut.
    pub fn self_consistent_general(&self) -> Result<(Vec<Vec2>, Vec<f64>)> {
        let mut x = vec![[0.0, 0.0]; self.classes.len()];
        // slow passages past near-bifurcations can leave the integration
        // short of the fixed point; keep integrating before polishing
        let mut last = None;
        for _ in 0..5 {
            x = self.integrate(x, 20_000)?;
            match self.polish(x.clone()).or_else(|_| self.joint_newton(x.clone())) {
                Ok(v) => return Ok(v),
                Err(e) => last = Some(e),
            }
        }
        Err(last.unwrap())
    }

    fn integrate(&self, mut x: Vec<Vec2>, steps: usize) -> Result<Vec<Vec2>> {
        let dt = 0.05;
        for _ in 0..steps {
            let (next, _) = self.homogeneous_step(&x, dt)?;
            let moved = next.iter().zip(&x).map(|(a, b)| dist(*a, *b)).fold(0.0, f64::max);
            x = next;
            if moved < 1e-9 * dt {
                break;
            }
        }
        Ok(x)
    }

    fn polish(&self, mut x: Vec<Vec2>) -> Result<(Vec<Vec2>, Vec<f64>)> {
        let mut f = self.aggregates(&x)?;
        for _ in 0..500 {
            let fields = self.fields(&f)?;
            for (c, field) in fields.iter().enumerate() {
                x[c] = nearest_root(field, x[c])?;
            }
            let target = self.aggregates(&x)?;
            let change = f.iter().zip(&target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if change < 1e-12 {
                return Ok((x, target));
            }
            for (a, b) in f.iter_mut().zip(&target) {
                *a = 0.5 * *a + 0.5 * b;
            }
        }
        Err(Error::NonConvergence("self-consistent aggregates".into()))
    }

    /// Drift of every class at the aggregates its own positions imply.
    fn joint_drift(&self, x: &[Vec2]) -> Result<Vec<f64>> {
        let f = self.aggregates(x)?;
        let mut out = Vec::with_capacity(2 * x.len());
        for (c, p) in x.iter().enumerate() {
            out.extend_from_slice(&self.field(c, &f)?.drift(*p));
        }
        Ok(out)
    }

    /// Damped Newton on the coupled system, finite-difference Jacobian.
    fn joint_newton(&self, mut x: Vec<Vec2>) -> Result<(Vec<Vec2>, Vec<f64>)> {
        let n = 2 * x.len();
        let flat = |x: &[Vec2]| x.iter().flat_map(|p| p.iter().copied()).collect::<Vec<f64>>();
        let unflat = |v: &[f64]| v.chunks(2).map(|c| [c[0], c[1]]).collect::<Vec<Vec2>>();
        let size = |g: &[f64]| g.iter().map(|v| v * v).sum::<f64>().sqrt();
        for _ in 0..100 {
            let g = self.joint_drift(&x)?;
            let r0 = size(&g);
            if r0 < 1e-12 {
                let f = self.aggregates(&x)?;
                return Ok((x, f));
            }
            let base = flat(&x);
            let h = 1e-7;
            let mut jac = vec![0.0; n * n];
            for j in 0..n {
                let mut up = base.clone();
                let mut dn = base.clone();
                up[j] += h;
                dn[j] -= h;
                let (gu, gd) = (self.joint_drift(&unflat(&up))?, self.joint_drift(&unflat(&dn))?);
                for i in 0..n {
                    jac[i * n + j] = (gu[i] - gd[i]) / (2.0 * h);
                }
            }
            let step = crate::linalg::solve_dense(jac, g)
                .ok_or_else(|| Error::NonConvergence("singular joint Jacobian".into()))?;
            let mut lambda = 1.0;
            loop {
                let trial: Vec<f64> = base.iter().zip(&step).map(|(b, s)| b - lambda * s).collect();
                let t = unflat(&trial);
                if self.joint_drift(&t).map_or(false, |g| size(&g) < r0) || lambda < 1e-6 {
                    x = t;
                    break;
                }
                lambda *= 0.5;
            }
        }
        Err(Error::NonConvergence("joint self-consistency".into()))
    }

    /// Scenario (i): class 2 is the mirror image of class 1, which makes
    /// `f_2 = 1` and `f_1 f_3 = 1` exact. Only class 1 is iterated.
    fn symmetric_self_consistent(&self) -> Result<(Vec<Vec2>, Vec<f64>)> {
        let symmetric_f = |x: Vec2| -> Result<Vec<f64>> {
            let f1 = self.aggregates(&[x, mirror(x)])?[0];
            Ok(vec![f1, 1.0, 1.0 / f1])
        };
        let dt = 0.05;
        let mut x = [0.0, 0.0];
        for _ in 0..20_000 {
            let f = symmetric_f(x)?;
            let mu = self.field(0, &f)?.drift(x);
            let next = [x[0] + dt * mu[0], x[1] + dt * mu[1]];
            let moved = dist(next, x);
            x = next;
            if moved < 1e-9 * dt {
                break;
            }
        }
        let mut f = symmetric_f(x)?;
        for _ in 0..500 {
            x = nearest_root(&self.field(0, &f)?, x)?;
            let target = symmetric_f(x)?;
            if (target[0] - f[0]).abs() < 1e-8 {
                return Ok((vec![x, mirror(x)], target));
            }
            let f1 = 0.5 * f[0] + 0.5 * target[0];
            f = vec![f1, 1.0, 1.0 / f1];
        }
        Err(Error::NonConvergence("symmetric self-consistent aggregates".into()))
    }
}

/// Damped Newton from `x` on a drift field.
pub(crate) fn nearest_root(field: &impl LangevinField, mut x: Vec2) -> Result<Vec2> {
    use crate::linalg::{norm, solve};
    for _ in 0..100 {
        let mu = field.drift(x);
        let r0 = norm(mu);
        if r0 < 1e-13 {
            return Ok(x);
        }
        let j = field.drift_jacobian(x);
        let step = solve(&j, mu).ok_or_else(|| Error::NonConvergence("singular Jacobian".into()))?;
        let mut lambda = 1.0;
        loop {
            let trial = [x[0] - lambda * step[0], x[1] - lambda * step[1]];
            if norm(field.drift(trial)) < r0 || lambda < 1e-6 {
                x = trial;
                break;
            }
            lambda *= 0.5;
        }
    }
    if norm(field.drift(x)) < 1e-10 {
        Ok(x)
    } else {
        Err(Error::NonConvergence(format!("Newton from ({:.4}, {:.4})", x[0], x[1])))
    }
}
