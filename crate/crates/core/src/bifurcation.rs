//! Zeros of the drift field, their linear stability, and scans over the
//! intensity of choice for changes in the fixed-point structure.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dist, eigenvalues, eigenvector, norm, solve, Vec2};
use crate::simulate::zone_of;
use crate::theory::{fd_jacobian, DriftField, LangevinField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stability {
    Stable,
    Saddle,
    Unstable,
    /// An eigenvalue with vanishing real part: the point sits on a
    /// bifurcation.
    Marginal,
}

impl Stability {
    pub fn from_eigenvalues(ev: &[Complex64; 2], tol: f64) -> Self {
        let (a, b) = (ev[0].re, ev[1].re);
        if a.abs() <= tol || b.abs() <= tol {
            Stability::Marginal
        } else if a < 0.0 && b < 0.0 {
            Stability::Stable
        } else if a > 0.0 && b > 0.0 {
            Stability::Unstable
        } else {
            Stability::Saddle
        }
    }
}

/// Choice probabilities within this of uniform mark a point as having no
/// market preference.
pub const INDIFFERENCE_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub location: Vec2,
    pub class_id: usize,
    pub stability: Stability,
    /// Eigenvalues of the drift Jacobian, sorted by decreasing real part.
    pub eigenvalues: [Complex64; 2],
}

impl FixedPoint {
    /// Classifies a root of `field` by its finite-difference Jacobian.
    pub fn classify(field: &impl LangevinField, location: Vec2, class_id: usize, fd_step: f64) -> Self {
        let j = fd_jacobian(|x| field.drift(x), location, fd_step);
        let ev = eigenvalues(&j);
        Self {
            location,
            class_id,
            stability: Stability::from_eigenvalues(&ev, 1e-9),
            eigenvalues: ev,
        }
    }

    /// Preferred market (0-based), or `None` when choice is uniform.
    pub fn zone(&self, beta: f64) -> Option<usize> {
        if is_indifferent(self.location, beta) {
            None
        } else {
            Some(zone_of(self.location))
        }
    }

    /// Unit eigenvector of the positive eigenvalue of a saddle.
    pub fn unstable_direction(&self, field: &impl LangevinField) -> Option<Vec2> {
        if self.stability != Stability::Saddle {
            return None;
        }
        let j = field.drift_jacobian(self.location);
        Some(eigenvector(&j, self.eigenvalues[0].re))
    }
}

/// Logit probabilities at attraction differences `x` are uniform to within
/// [`INDIFFERENCE_TOL`].
pub fn is_indifferent(x: Vec2, beta: f64) -> bool {
    let p = DriftField::from_moments(beta, Default::default()).choice_probabilities(x);
    p.iter().all(|q| (q - 1.0 / 3.0).abs() <= INDIFFERENCE_TOL)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RootOptions {
    /// Starts per axis.
    pub grid: usize,
    pub merge_tol: f64,
    pub residual_tol: f64,
    pub fd_step: f64,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            grid: 50,
            merge_tol: 1e-6,
            residual_tol: 1e-10,
            fd_step: 1e-6,
            max_iter: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RootSearch {
    /// Distinct roots sorted by location.
    pub points: Vec<FixedPoint>,
    /// Starts whose iteration did not reach the residual tolerance.
    pub diverged: usize,
}

impl RootSearch {
    pub fn attractors(&self) -> impl Iterator<Item = &FixedPoint> {
        self.points.iter().filter(|p| p.stability == Stability::Stable)
    }

    pub fn saddles(&self) -> impl Iterator<Item = &FixedPoint> {
        self.points.iter().filter(|p| p.stability == Stability::Saddle)
    }

    /// The root closest to the origin.
    pub fn central(&self) -> Option<&FixedPoint> {
        self.points
            .iter()
            .min_by(|a, b| norm(a.location).total_cmp(&norm(b.location)))
    }
}

/// Damped Newton iteration; `None` if it fails to reach `tol`.
pub fn newton(field: &impl LangevinField, start: Vec2, tol: f64, max_iter: usize) -> Option<Vec2> {
    let mut x = start;
    let mut r = norm(field.drift(x));
    for _ in 0..max_iter {
        if r < tol {
            return Some(x);
        }
        let j = field.drift_jacobian(x);
        let step = solve(&j, field.drift(x))?;
        let mut lambda = 1.0;
        loop {
            let trial = [x[0] - lambda * step[0], x[1] - lambda * step[1]];
            let rt = norm(field.drift(trial));
            if rt < r || lambda < 1e-8 {
                x = trial;
                r = rt;
                break;
            }
            lambda *= 0.5;
        }
        if !x[0].is_finite() || !x[1].is_finite() {
            return None;
        }
    }
    (r < tol).then_some(x)
}

/// Multi-start Newton over a `grid x grid` lattice of cell centres in
/// `[-half_width, half_width]^2`.
pub fn find_fixed_points(
    field: &impl LangevinField,
    class_id: usize,
    half_width: f64,
    opts: &RootOptions,
) -> RootSearch {
    let n = opts.grid.max(1);
    let h = 2.0 * half_width / n as f64;
    let results: Vec<Option<Vec2>> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let start = [
                -half_width + ((k / n) as f64 + 0.5) * h,
                -half_width + ((k % n) as f64 + 0.5) * h,
            ];
            newton(field, start, opts.residual_tol, opts.max_iter)
        })
        .collect();
    let mut roots: Vec<Vec2> = Vec::new();
    let mut diverged = 0;
    for r in results {
        match r {
            Some(x) => {
                if !roots.iter().any(|y| dist(x, *y) < opts.merge_tol) {
                    roots.push(x);
                }
            }
            None => diverged += 1,
        }
    }
    roots.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    RootSearch {
        points: roots
            .into_iter()
            .map(|x| FixedPoint::classify(field, x, class_id, opts.fd_step))
            .collect(),
        diverged,
    }
}

/// Search box half-width containing every zero of a drift field: each
/// coordinate of a zero is a difference of two terms bounded by the largest
/// mean payoff.
pub fn search_half_width(field: &DriftField) -> f64 {
    let p = field.max_payoff();
    if p > 0.0 {
        2.0 * p
    } else {
        1.0
    }
}

/// Roots of a drift field over its natural search box.
pub fn fixed_points(field: &DriftField, class_id: usize, opts: &RootOptions) -> RootSearch {
    find_fixed_points(field, class_id, search_half_width(field), opts)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TransitionKind {
    /// The number of zeros changes.
    FixedPointCount,
    /// An eigenvalue of a tracked zero crosses the imaginary axis.
    StabilityChange,
    /// Forward and backward minimal actions between two attractors balance.
    WeightExchange,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub kind: TransitionKind,
    /// What was monitored, e.g. `zone 2 attractors`.
    pub label: String,
    /// Bracket in 1/beta containing the change.
    pub inv_beta_lo: f64,
    pub inv_beta_hi: f64,
    /// Monitored value on the high-1/beta (low-beta) side and the other side.
    pub before: String,
    pub after: String,
}

impl Transition {
    pub fn inv_beta(&self) -> f64 {
        0.5 * (self.inv_beta_lo + self.inv_beta_hi)
    }

    pub fn beta(&self) -> f64 {
        1.0 / self.inv_beta()
    }

    pub fn width(&self) -> f64 {
        self.inv_beta_hi - self.inv_beta_lo
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub transitions: Vec<Transition>,
}

impl ThresholdReport {
    pub fn find(&self, label: &str) -> Option<&Transition> {
        self.transitions.iter().find(|t| t.label == label)
    }

    pub fn of_kind(&self, kind: TransitionKind) -> impl Iterator<Item = &Transition> {
        self.transitions.iter().filter(move |t| t.kind == kind)
    }
}

/// Bisects `[lo, hi]` until narrower than `tol`, keeping `f(lo) != f(hi)`.
pub fn bisect<T: PartialEq>(
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    f: impl Fn(f64) -> Result<T>,
) -> Result<(f64, f64)> {
    let f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo == f_hi {
        return Err(Error::NoTransition { lo, hi });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid)? == f_hi {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi))
}

/// Fixed-point structure summarised for threshold scans.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Structure {
    pub roots: usize,
    /// Attractors per preferred market, indifferent ones excluded. Saddles
    /// are left out: on symmetric fields they sit on zone boundaries.
    pub per_zone: [usize; 3],
    /// Stability of the root closest to the origin.
    pub central: Option<Stability>,
}

impl Structure {
    pub fn of(search: &RootSearch, beta: f64) -> Self {
        let mut per_zone = [0; 3];
        for p in search.attractors() {
            if let Some(z) = p.zone(beta) {
                per_zone[z] += 1;
            }
        }
        Self {
            roots: search.points.len(),
            per_zone,
            central: search.central().map(|p| p.stability),
        }
    }

    fn monitored(&self) -> Vec<(String, TransitionKind, String)> {
        let mut out = vec![(
            "roots".to_string(),
            TransitionKind::FixedPointCount,
            self.roots.to_string(),
        )];
        for (m, n) in self.per_zone.iter().enumerate() {
            out.push((
                format!("zone {} attractors", m + 1),
                TransitionKind::FixedPointCount,
                n.to_string(),
            ));
        }
        out.push((
            "central stability".to_string(),
            TransitionKind::StabilityChange,
            format!("{:?}", self.central),
        ));
        out
    }
}

/// Scans 1/beta from `inv_beta_hi` down to `inv_beta_lo` in `samples` steps
/// and bisects every change of the fixed-point structure to width `tol`.
/// `field_at(inv_beta)` supplies the drift field at that intensity of choice.
pub fn scan_thresholds(
    field_at: impl Fn(f64) -> Result<DriftField> + Sync,
    inv_beta_lo: f64,
    inv_beta_hi: f64,
    samples: usize,
    tol: f64,
    opts: &RootOptions,
) -> Result<ThresholdReport> {
    let structure = |inv_beta: f64| -> Result<Structure> {
        let field = field_at(inv_beta)?;
        Ok(Structure::of(&fixed_points(&field, 0, opts), field.beta))
    };
    let samples = samples.max(2);
    let grid: Vec<f64> = (0..samples)
        .map(|k| inv_beta_hi - (inv_beta_hi - inv_beta_lo) * k as f64 / (samples - 1) as f64)
        .collect();
    let sampled: Vec<Structure> = grid
        .par_iter()
        .map(|&x| structure(x))
        .collect::<Result<Vec<_>>>()?;

    let mut transitions = Vec::new();
    for k in 1..samples {
        let (a, b) = (sampled[k - 1].monitored(), sampled[k].monitored());
        for (i, (label, kind, va)) in a.iter().enumerate() {
            if *va == b[i].2 {
                continue;
            }
            let probe = |x: f64| -> Result<String> { Ok(structure(x)?.monitored()[i].2.clone()) };
            let (lo, hi) = bisect(grid[k], grid[k - 1], tol, probe)?;
            transitions.push(Transition {
                kind: *kind,
                label: label.clone(),
                inv_beta_lo: lo,
                inv_beta_hi: hi,
                before: va.clone(),
                after: b[i].2.clone(),
            });
        }
    }
    if transitions.is_empty() {
        return Err(Error::NoTransition {
            lo: inv_beta_lo,
            hi: inv_beta_hi,
        });
    }
    Ok(ThresholdReport { transitions })
}
