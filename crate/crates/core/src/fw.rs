//! Freidlin-Wentzell analysis of noise-activated switching between the
//! attractors of the single-agent drift.
//!
//! For small `r` the stationary weight of an attractor scales like
//! `exp(-W/r)`, where `W` is its stochastic potential: the cheapest spanning
//! in-tree of minimal transition actions leading into it. The minimal action
//! of an escape is that of the uphill path from the attractor to the saddle
//! it crosses; the downhill remainder follows the drift at no cost.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bifurcation::{FixedPoint, RootSearch, Stability};
use crate::error::{invalid, Error, Result};
use crate::linalg::{dist, inverse, mat_vec, norm, sym_condition, transpose_vec, Mat2, Vec2};
use crate::optimize::{bfgs, BfgsOptions};
use crate::theory::LangevinField;

/// Covariance condition numbers above this are treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// States at uniform times `0, dt, .., total_time`; endpoints are pinned
/// during minimisation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub points: Vec<Vec2>,
    pub total_time: f64,
}

impl Path {
    pub fn new(points: Vec<Vec2>, total_time: f64) -> Result<Self> {
        if points.len() < 3 {
            return Err(invalid("a path needs K >= 2 segments"));
        }
        if !(total_time > 0.0) {
            return Err(invalid("path duration must be positive"));
        }
        Ok(Self { points, total_time })
    }

    /// `K + 1` equally spaced points from `a` to `b`.
    pub fn straight(a: Vec2, b: Vec2, k: usize, total_time: f64) -> Result<Self> {
        let pts = (0..=k)
            .map(|i| {
                let s = i as f64 / k as f64;
                [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
            })
            .collect();
        Self::new(pts, total_time)
    }

    /// Number of segments.
    pub fn segments(&self) -> usize {
        self.points.len() - 1
    }

    pub fn dt(&self) -> f64 {
        self.total_time / self.segments() as f64
    }

    pub fn times(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..self.points.len()).map(|i| i as f64 * dt).collect()
    }
}

fn weight(field: &impl LangevinField, x: Vec2) -> Result<Mat2> {
    let s = field.covariance(x);
    let c = sym_condition(&s);
    if !(c <= MAX_CONDITION) {
        return Err(Error::SingularCovariance {
            x: x[0],
            y: x[1],
            condition: c,
        });
    }
    inverse(&s).ok_or(Error::SingularCovariance {
        x: x[0],
        y: x[1],
        condition: f64::INFINITY,
    })
}

/// Discretised Onsager-Machlup action
/// `sum_k 1/2 (v_k - mu(m_k))^T Sigma^{-1}(m_k) (v_k - mu(m_k)) dt`
/// with midpoints `m_k` and difference velocities `v_k`.
pub fn path_action(path: &Path, field: &impl LangevinField) -> Result<f64> {
    let dt = path.dt();
    let mut s = 0.0;
    for w in path.points.windows(2) {
        let mid = [0.5 * (w[0][0] + w[1][0]), 0.5 * (w[0][1] + w[1][1])];
        let mu = field.drift(mid);
        let e = [(w[1][0] - w[0][0]) / dt - mu[0], (w[1][1] - w[0][1]) / dt - mu[1]];
        let u = mat_vec(&weight(field, mid)?, e);
        s += 0.5 * (e[0] * u[0] + e[1] * u[1]) * dt;
    }
    Ok(s)
}

/// Action and its gradient with respect to every path point.
pub fn action_gradient(points: &[Vec2], dt: f64, field: &impl LangevinField) -> Result<(f64, Vec<Vec2>)> {
    let mut s = 0.0;
    let mut grad = vec![[0.0; 2]; points.len()];
    for k in 0..points.len() - 1 {
        let (a, b) = (points[k], points[k + 1]);
        let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        let mu = field.drift(mid);
        let e = [(b[0] - a[0]) / dt - mu[0], (b[1] - a[1]) / dt - mu[1]];
        let u = mat_vec(&weight(field, mid)?, e);
        s += 0.5 * (e[0] * u[0] + e[1] * u[1]) * dt;
        // d/dmid of 1/2 e^T W e: -J^T u - 1/2 u^T dSigma_j u
        let jt = transpose_vec(&field.drift_jacobian(mid), u);
        let ds = field.covariance_gradient(mid);
        let mut gm = [0.0; 2];
        for j in 0..2 {
            let su = mat_vec(&ds[j], u);
            gm[j] = -jt[j] - 0.5 * (u[0] * su[0] + u[1] * su[1]);
        }
        for j in 0..2 {
            grad[k + 1][j] += u[j] + 0.5 * dt * gm[j];
            grad[k][j] += -u[j] + 0.5 * dt * gm[j];
        }
    }
    Ok((s, grad))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionOptions {
    /// Segments K.
    pub segments: usize,
    /// Duration T.
    pub total_time: f64,
    pub grad_tol: f64,
    pub max_iter: usize,
}

impl Default for ActionOptions {
    fn default() -> Self {
        Self {
            segments: 10,
            total_time: 10.0,
            grad_tol: 1e-9,
            max_iter: 20_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionResult {
    pub action: f64,
    pub path: Path,
    pub converged: bool,
    pub grad_norm: f64,
    /// The perturbed restart was needed.
    pub retried: bool,
}

fn minimize_from(
    field: &impl LangevinField,
    init: &Path,
    opts: &ActionOptions,
) -> Result<ActionResult> {
    let k = init.segments();
    let dt = init.dt();
    let (a, b) = (init.points[0], init.points[k]);
    let x0: Vec<f64> = init.points[1..k].iter().flat_map(|p| [p[0], p[1]]).collect();
    let assemble = |x: &[f64]| -> Vec<Vec2> {
        let mut pts = Vec::with_capacity(k + 1);
        pts.push(a);
        pts.extend(x.chunks(2).map(|c| [c[0], c[1]]));
        pts.push(b);
        pts
    };
    let mut failure = None;
    let m = bfgs(
        |x, g| match action_gradient(&assemble(x), dt, field) {
            Ok((s, grad)) => {
                for (i, p) in grad[1..k].iter().enumerate() {
                    g[2 * i] = p[0];
                    g[2 * i + 1] = p[1];
                }
                s
            }
            Err(e) => {
                failure.get_or_insert(e);
                f64::INFINITY
            }
        },
        x0,
        &BfgsOptions {
            grad_tol: opts.grad_tol,
            max_iter: opts.max_iter,
        },
    );
    if !m.value.is_finite() {
        return Err(failure.unwrap_or_else(|| Error::NonConvergence("action diverged".into())));
    }
    Ok(ActionResult {
        action: m.value,
        path: Path::new(assemble(&m.x), init.total_time)?,
        converged: m.converged,
        grad_norm: m.grad_norm,
        retried: false,
    })
}

/// Minimal action over paths from `from` to `to` with pinned endpoints,
/// starting from the straight line and retrying once from a perturbed line.
pub fn minimize_path(
    field: &impl LangevinField,
    from: Vec2,
    to: Vec2,
    opts: &ActionOptions,
) -> Result<ActionResult> {
    if opts.segments < 2 {
        return Err(invalid("K must be at least 2"));
    }
    let line = Path::straight(from, to, opts.segments, opts.total_time)?;
    let first = minimize_from(field, &line, opts)?;
    if first.converged {
        return Ok(first);
    }
    // bow the initial line sideways by a tenth of its length
    let d = [to[0] - from[0], to[1] - from[1]];
    let bent = Path::new(
        line.points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let s = i as f64 / opts.segments as f64;
                let bump = 0.1 * (std::f64::consts::PI * s).sin();
                [p[0] - bump * d[1], p[1] + bump * d[0]]
            })
            .collect(),
        opts.total_time,
    )?;
    let mut second = minimize_from(field, &bent, opts)?;
    second.retried = true;
    if second.converged && second.action <= first.action + 1e-12 || !first.converged && second.action < first.action {
        Ok(second)
    } else {
        Ok(ActionResult { retried: true, ..first })
    }
}

/// Minimal action from an attractor to a saddle of `field`.
pub fn minimize_action(
    from: &FixedPoint,
    to: &FixedPoint,
    field: &impl LangevinField,
    opts: &ActionOptions,
) -> Result<ActionResult> {
    for p in [from, to] {
        let r = norm(field.drift(p.location));
        if !(r < 1e-8) {
            return Err(invalid(format!(
                "({:.6}, {:.6}) is not a zero of the drift (|mu| = {r:.3e})",
                p.location[0], p.location[1]
            )));
        }
    }
    if to.stability != Stability::Saddle {
        return Err(invalid("the target of an escape path must be a saddle"));
    }
    minimize_path(field, from.location, to.location, opts)
}

/// Integrates the relaxation dynamics `dx/dt = mu(x)` with classical RK4.
pub fn relax(field: &impl LangevinField, start: Vec2, dt: f64, steps: usize) -> Vec<Vec2> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut x = start;
    out.push(x);
    let add = |x: Vec2, k: Vec2, h: f64| [x[0] + h * k[0], x[1] + h * k[1]];
    for _ in 0..steps {
        let k1 = field.drift(x);
        let k2 = field.drift(add(x, k1, 0.5 * dt));
        let k3 = field.drift(add(x, k2, 0.5 * dt));
        let k4 = field.drift(add(x, k3, dt));
        for i in 0..2 {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out.push(x);
    }
    out
}

/// Follows the drift from `start` until it settles; returns the end point
/// and the trajectory.
pub fn settle(field: &impl LangevinField, start: Vec2) -> (Vec2, Vec<Vec2>) {
    let dt = 0.01;
    let mut traj = vec![start];
    let mut x = start;
    for _ in 0..2000 {
        let seg = relax(field, x, dt, 100);
        x = *seg.last().unwrap();
        traj.extend_from_slice(&seg[1..]);
        if norm(field.drift(x)) < 1e-10 {
            break;
        }
    }
    (x, traj)
}

/// One escape route: from attractor `from` over `saddle` into `to`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    /// Index of the saddle among the root-search points.
    pub saddle: usize,
    pub action: f64,
    pub converged: bool,
}

/// The two attractors (indices into `attractors`) the unstable manifold of
/// `saddle` flows into.
pub fn saddle_connections(
    field: &impl LangevinField,
    saddle: &FixedPoint,
    attractors: &[&FixedPoint],
) -> Option<(usize, usize)> {
    let v = saddle.unstable_direction(field)?;
    let scale = 1e-4 * norm(saddle.location).max(1e-2);
    let land = |sign: f64| {
        let start = [saddle.location[0] + sign * scale * v[0], saddle.location[1] + sign * scale * v[1]];
        let (end, _) = settle(field, start);
        attractors
            .iter()
            .enumerate()
            .min_by(|a, b| dist(a.1.location, end).total_cmp(&dist(b.1.location, end)))
            .filter(|(_, a)| dist(a.location, end) < 1e-5)
            .map(|(i, _)| i)
    };
    match (land(1.0), land(-1.0)) {
        (Some(a), Some(b)) if a != b => Some((a, b)),
        _ => None,
    }
}

/// Minimal escape actions between all attractor pairs that share a saddle.
pub fn transition_edges(
    field: &(impl LangevinField + Sync),
    roots: &RootSearch,
    opts: &ActionOptions,
) -> Result<Vec<Edge>> {
    let attractors: Vec<&FixedPoint> = roots.attractors().collect();
    let jobs: Vec<(usize, usize, usize)> = roots
        .points
        .iter()
        .enumerate()
        .filter(|(_, p)| p.stability == Stability::Saddle)
        .filter_map(|(si, s)| saddle_connections(field, s, &attractors).map(|(a, b)| (si, a, b)))
        .flat_map(|(si, a, b)| [(si, a, b), (si, b, a)])
        .collect();
    jobs.par_iter()
        .map(|&(si, from, to)| {
            let res = minimize_action(attractors[from], &roots.points[si], field, opts)?;
            Ok(Edge {
                from,
                to,
                saddle: si,
                action: res.action,
                converged: res.converged,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PeakSize {
    /// Order-one weight as r -> 0.
    Large,
    /// Weight vanishing like exp(-deficit / r).
    Small,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Fragmentation {
    Unfragmented,
    Weak,
    Strong,
    /// Some attractor could not be connected to the others.
    Undetermined,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakClassification {
    /// Stochastic potential of each attractor (`inf` if unreachable).
    pub potential: Vec<f64>,
    pub sizes: Vec<PeakSize>,
    pub edges: Vec<Edge>,
    /// Threshold separating large from small peaks.
    pub epsilon: f64,
    pub fragmentation: Fragmentation,
    /// Every edge action came from a converged minimisation.
    pub converged: bool,
}

impl PeakClassification {
    pub fn large(&self) -> impl Iterator<Item = usize> + '_ {
        self.sizes.iter().enumerate().filter(|(_, s)| **s == PeakSize::Large).map(|(i, _)| i)
    }

    /// Potential gap of attractor `i` above the lowest one.
    pub fn deficit(&self, i: usize) -> f64 {
        let min = self.potential.iter().cloned().fold(f64::INFINITY, f64::min);
        self.potential[i] - min
    }
}

/// Large-versus-small threshold on the potential deficit.
pub fn epsilon_s(r: f64) -> f64 {
    (10.0 * r).max(1e-3)
}

/// Cheapest spanning in-tree into each node, over the given edges.
pub fn stochastic_potential(nodes: usize, edges: &[Edge]) -> Vec<f64> {
    // cheapest edge per ordered pair
    let mut cost = vec![vec![f64::INFINITY; nodes]; nodes];
    for e in edges {
        if e.action < cost[e.from][e.to] {
            cost[e.from][e.to] = e.action;
        }
    }
    let out: Vec<Vec<usize>> = (0..nodes)
        .map(|i| (0..nodes).filter(|&j| cost[i][j].is_finite()).collect())
        .collect();
    (0..nodes)
        .map(|root| {
            let others: Vec<usize> = (0..nodes).filter(|&i| i != root).collect();
            if others.iter().any(|&i| out[i].is_empty()) {
                return f64::INFINITY;
            }
            let mut best = f64::INFINITY;
            let mut choice = vec![0usize; others.len()];
            let mut next = vec![usize::MAX; nodes];
            'outer: loop {
                let mut total = 0.0;
                for (c, &i) in choice.iter().zip(&others) {
                    next[i] = out[i][*c];
                    total += cost[i][next[i]];
                }
                // every node must reach the root without revisiting
                let ok = others.iter().all(|&i| {
                    let mut x = i;
                    for _ in 0..nodes {
                        if x == root {
                            return true;
                        }
                        x = next[x];
                    }
                    x == root
                });
                if ok && total < best {
                    best = total;
                }
                for (c, &i) in choice.iter_mut().zip(&others) {
                    *c += 1;
                    if *c < out[i].len() {
                        continue 'outer;
                    }
                    *c = 0;
                }
                break;
            }
            best
        })
        .collect()
}

/// Labels attractors large or small from their escape actions at memory
/// parameter `r`: a peak is small once its potential exceeds the lowest one
/// by at least `epsilon_s(r)`.
pub fn classify_peaks(attractors: usize, edges: &[Edge], r: f64) -> PeakClassification {
    let epsilon = epsilon_s(r);
    let potential = stochastic_potential(attractors, edges);
    let min = potential.iter().cloned().fold(f64::INFINITY, f64::min);
    let sizes: Vec<PeakSize> = potential
        .iter()
        .map(|w| {
            // relative slack so a deficit of exactly epsilon counts as small
            if w - min >= epsilon * (1.0 - 1e-9) {
                PeakSize::Small
            } else {
                PeakSize::Large
            }
        })
        .collect();
    let large = sizes.iter().filter(|s| **s == PeakSize::Large).count();
    let fragmentation = if attractors <= 1 {
        Fragmentation::Unfragmented
    } else if potential.iter().any(|w| w.is_infinite()) {
        Fragmentation::Undetermined
    } else if large >= 2 {
        Fragmentation::Strong
    } else {
        Fragmentation::Weak
    };
    PeakClassification {
        potential,
        sizes,
        edges: edges.to_vec(),
        epsilon,
        fragmentation,
        converged: edges.iter().all(|e| e.converged),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auction::{MarketSpec, OrderDistribution};
    use crate::bifurcation::{fixed_points, RootOptions};
    use crate::learning::TraderClassSpec;
    use crate::theory::{DriftField, LinearField};

    fn biased_field() -> DriftField {
        let class = TraderClassSpec::new(0.8, 1.0 / 0.2, 0.01).unwrap();
        let markets = MarketSpec::list(&[0.3, 0.35, 0.7]).unwrap();
        DriftField::new(&class, &markets, &[0.85, 1.04, 0.82], &OrderDistribution::default()).unwrap()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let field = biased_field();
        let path = Path::straight([0.1, -0.2], [0.5, 0.4], 6, 3.0).unwrap();
        let (s, g) = action_gradient(&path.points, path.dt(), &field).unwrap();
        assert!((s - path_action(&path, &field).unwrap()).abs() < 1e-14);
        let h = 1e-6;
        for k in 1..path.segments() {
            for j in 0..2 {
                let mut up = path.clone();
                let mut dn = path.clone();
                up.points[k][j] += h;
                dn.points[k][j] -= h;
                let fd = (path_action(&up, &field).unwrap() - path_action(&dn, &field).unwrap()) / (2.0 * h);
                assert!((fd - g[k][j]).abs() < 1e-6 * (1.0 + fd.abs()), "{k} {j}: {fd} vs {}", g[k][j]);
            }
        }
    }

    #[test]
    fn constant_path_at_fixed_point_is_free() {
        let field = LinearField { k: 1.0, s: 0.5 };
        let path = Path::new(vec![[0.0, 0.0]; 11], 10.0).unwrap();
        assert_eq!(path_action(&path, &field).unwrap(), 0.0);
    }

    #[test]
    fn relaxation_path_is_free() {
        let field = biased_field();
        let traj = relax(&field, [0.9, -0.4], 1e-3, 10_000);
        let pts: Vec<Vec2> = traj.iter().step_by(10).cloned().collect();
        let path = Path::new(pts, 10.0).unwrap();
        assert!(path_action(&path, &field).unwrap() < 1e-6);
    }

    #[test]
    fn ou_reversed_relaxation_action() {
        // x(t) = A exp(-k (T - t)) costs k A^2 / s (1 - exp(-2kT))
        let (k, s, a, t) = (0.7, 0.3, 1.5, 10.0);
        let field = LinearField { k, s };
        let n = 4000;
        let pts = (0..=n)
            .map(|i| [a * (-k * (t - t * i as f64 / n as f64)).exp(), 0.0])
            .collect();
        let got = path_action(&Path::new(pts, t).unwrap(), &field).unwrap();
        let want = k * a * a / s * (1.0 - (-2.0 * k * t).exp());
        assert!((got / want - 1.0).abs() < 1e-4, "{got} vs {want}");
    }

    #[test]
    fn ou_minimizer_profile() {
        // optimal path from 0 to A in time T: A sinh(kt)/sinh(kT),
        // action k A^2 / (s (1 - exp(-2kT)))
        let (k, s, a, t) = (1.0, 0.5, 1.0, 10.0);
        let field = LinearField { k, s };
        let opts = ActionOptions { segments: 40, total_time: t, ..Default::default() };
        let res = minimize_path(&field, [0.0, 0.0], [a, 0.0], &opts).unwrap();
        assert!(res.converged);
        let want = k * a * a / (s * (1.0 - (-2.0 * k * t).exp()));
        assert!((res.action / want - 1.0).abs() < 0.02, "{} vs {want}", res.action);
        for (p, time) in res.path.points.iter().zip(res.path.times()) {
            let exact = a * (k * time).sinh() / (k * t).sinh();
            assert!((p[0] - exact).abs() < 0.02 * a && p[1].abs() < 1e-9);
        }
    }

    #[test]
    fn singular_covariance_rejected() {
        let field = LinearField { k: 1.0, s: 0.0 };
        let path = Path::straight([0.0, 0.0], [1.0, 0.0], 4, 1.0).unwrap();
        assert!(matches!(path_action(&path, &field), Err(Error::SingularCovariance { .. })));
    }

    #[test]
    fn fair_market_escape_actions_are_symmetric() {
        let class = TraderClassSpec::new(0.8, 1.0 / 0.245, 0.01).unwrap();
        let field = DriftField::new(&class, &[MarketSpec::fair(); 3], &[1.0; 3], &OrderDistribution::default()).unwrap();
        let roots = fixed_points(&field, 0, &RootOptions::default());
        let centre = roots.central().unwrap();
        let actions: Vec<f64> = roots
            .saddles()
            .map(|s| minimize_action(centre, s, &field, &ActionOptions::default()).unwrap().action)
            .collect();
        assert_eq!(actions.len(), 3);
        for w in actions.windows(2) {
            assert!((w[0] - w[1]).abs() < 1e-6, "{actions:?}");
        }
        // doubling K moves the action by under 2%
        let fine = ActionOptions { segments: 20, ..Default::default() };
        let s0 = roots.saddles().next().unwrap();
        let a20 = minimize_action(centre, s0, &field, &fine).unwrap().action;
        assert!((a20 / actions[0] - 1.0).abs() < 0.02, "{a20} vs {}", actions[0]);
    }

    #[test]
    fn classification_examples() {
        let edge = |from, to, action| Edge { from, to, saddle: 0, action, converged: true };
        // three symmetric peaks
        let ring = [edge(0, 1, 0.5), edge(1, 0, 0.5), edge(1, 2, 0.5), edge(2, 1, 0.5), edge(0, 2, 0.5), edge(2, 0, 0.5)];
        let c = classify_peaks(3, &ring, 0.01);
        assert_eq!(c.fragmentation, Fragmentation::Strong);
        assert_eq!(c.large().count(), 3);
        // deficit 0.01 at r = 0.001
        let c = classify_peaks(2, &[edge(0, 1, 0.30), edge(1, 0, 0.31)], 0.001);
        assert_eq!(c.sizes, vec![PeakSize::Small, PeakSize::Large]);
        assert_eq!(c.fragmentation, Fragmentation::Weak);
        assert_eq!(classify_peaks(1, &[], 0.01).fragmentation, Fragmentation::Unfragmented);
        assert_eq!(classify_peaks(2, &[], 0.01).fragmentation, Fragmentation::Undetermined);
    }

    #[test]
    fn potential_of_a_chain() {
        let edge = |from, to, action| Edge { from, to, saddle: 0, action, converged: true };
        // 0 <-> 1 <-> 2
        let e = [edge(0, 1, 1.0), edge(1, 0, 2.0), edge(1, 2, 3.0), edge(2, 1, 0.5)];
        let w = stochastic_potential(3, &e);
        assert_eq!(w, vec![2.5, 1.5, 4.0]);
    }

    use proptest::prelude::*;
    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn labels_invariant_under_joint_scaling(
            a in prop::collection::vec(0.0f64..1.0, 6), r in 1e-3f64..0.05, c in 0.1f64..10.0
        ) {
            let edge = |from, to, action| Edge { from, to, saddle: 0, action, converged: true };
            let build = |s: f64| vec![
                edge(0, 1, s * a[0]), edge(1, 0, s * a[1]), edge(1, 2, s * a[2]),
                edge(2, 1, s * a[3]), edge(0, 2, s * a[4]), edge(2, 0, s * a[5]),
            ];
            // the absolute floor of epsilon is inactive for r, c r >= 1e-4
            let x = classify_peaks(3, &build(1.0), r);
            let y = classify_peaks(3, &build(c), c * r);
            prop_assert_eq!(x.sizes, y.sizes);
        }
    }
}
