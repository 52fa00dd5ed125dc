//! Steady-state triangle codes, phase-diagram sweeps over market bias and
//! intensity of choice, fair-market thresholds and the loyalty-group
//! counting argument.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::auction::OrderDistribution;
use crate::bifurcation::{
    bisect, fixed_points, FixedPoint, RootOptions, RootSearch, Stability, ThresholdReport, Transition,
    TransitionKind,
};
use crate::error::{invalid, Error, Result};
use crate::fw::{classify_peaks, transition_edges, ActionOptions, Fragmentation, PeakClassification, PeakSize};
use crate::learning::TraderClassSpec;
use crate::linalg::{dist, Vec2};
use crate::theory::{aggregates_from_choice, nearest_root, DriftField, MarketSystem};
use crate::MarketSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Preference {
    /// Preferred market, 0-based.
    Market(usize),
    /// Uniform choice: the peak sits at the origin.
    Indifferent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CodeEntry {
    pub preference: Preference,
    pub size: PeakSize,
}

/// Peak structure of one class: which markets host large and small peaks.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TriangleCode {
    /// Sorted entries, large before small, at least one large.
    Peaks(Vec<CodeEntry>),
    Undetermined(String),
}

impl TriangleCode {
    pub fn from_entries(mut entries: Vec<CodeEntry>) -> Result<Self> {
        if !entries.iter().any(|e| e.size == PeakSize::Large) {
            return Err(invalid("a triangle code needs at least one large peak"));
        }
        let key = |e: &CodeEntry| (e.size == PeakSize::Small, e.preference);
        entries.sort_by_key(key);
        entries.dedup();
        Ok(Self::Peaks(entries))
    }

    pub fn entries(&self) -> &[CodeEntry] {
        match self {
            Self::Peaks(e) => e,
            Self::Undetermined(_) => &[],
        }
    }

    pub fn is_determined(&self) -> bool {
        matches!(self, Self::Peaks(_))
    }

    pub fn large(&self) -> Vec<Preference> {
        self.with_size(PeakSize::Large)
    }

    pub fn small(&self) -> Vec<Preference> {
        self.with_size(PeakSize::Small)
    }

    fn with_size(&self, size: PeakSize) -> Vec<Preference> {
        self.entries().iter().filter(|e| e.size == size).map(|e| e.preference).collect()
    }

    pub fn fragmentation(&self) -> Fragmentation {
        match self {
            Self::Undetermined(_) => Fragmentation::Undetermined,
            Self::Peaks(e) => {
                let large = e.iter().filter(|e| e.size == PeakSize::Large).count();
                if large >= 2 {
                    Fragmentation::Strong
                } else if e.len() >= 2 {
                    Fragmentation::Weak
                } else {
                    Fragmentation::Unfragmented
                }
            }
        }
    }

    /// Relabels markets: market `m` becomes `perm[m]`.
    pub fn permuted(&self, perm: [usize; 3]) -> Self {
        match self {
            Self::Undetermined(s) => Self::Undetermined(s.clone()),
            Self::Peaks(e) => {
                let moved = e
                    .iter()
                    .map(|c| CodeEntry {
                        preference: match c.preference {
                            Preference::Market(m) => Preference::Market(perm[m]),
                            p => p,
                        },
                        size: c.size,
                    })
                    .collect();
                Self::from_entries(moved).expect("relabelling keeps a large peak")
            }
        }
    }
}

/// `L1 L2 s3` style: capital L for large, s for small, `*` for indifferent,
/// markets 1-based; `?` for undetermined.
impl fmt::Display for TriangleCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Undetermined(_) => write!(f, "?"),
            Self::Peaks(e) => {
                let parts: Vec<String> = e
                    .iter()
                    .map(|c| {
                        let s = if c.size == PeakSize::Large { "L" } else { "s" };
                        match c.preference {
                            Preference::Market(m) => format!("{s}{}", m + 1),
                            Preference::Indifferent => format!("{s}*"),
                        }
                    })
                    .collect();
                write!(f, "{}", parts.join(" "))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseOptions {
    pub roots: RootOptions,
    pub action: ActionOptions,
    /// Memory parameter for the large/small threshold; 0 classifies in the
    /// r -> 0 limit.
    pub r: f64,
    /// Resolve inconsistent homogeneous states by a two-peak mixture.
    pub mixture: bool,
    /// Step in mixture weight while searching for the balance.
    pub mixture_step: f64,
}

impl Default for PhaseOptions {
    fn default() -> Self {
        Self {
            roots: RootOptions::default(),
            action: ActionOptions::default(),
            r: 0.0,
            mixture: true,
            mixture_step: 0.02,
        }
    }
}

/// Fixed points and peak sizes of one class at given aggregates.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassAnalysis {
    pub roots: RootSearch,
    /// Attractors, in the order used by `peaks`.
    pub attractors: Vec<FixedPoint>,
    pub peaks: PeakClassification,
    pub beta: f64,
}

impl ClassAnalysis {
    pub fn new(field: &DriftField, class: usize, opts: &PhaseOptions) -> Result<Self> {
        let roots = fixed_points(field, class, &opts.roots);
        let edges = transition_edges(field, &roots, &opts.action)?;
        let attractors: Vec<FixedPoint> = roots.attractors().cloned().collect();
        let peaks = classify_peaks(attractors.len(), &edges, opts.r);
        Ok(Self {
            roots,
            attractors,
            peaks,
            beta: field.beta,
        })
    }

    /// Attractor within `1e-5` of `x`.
    pub fn attractor_at(&self, x: Vec2) -> Option<usize> {
        self.attractors
            .iter()
            .enumerate()
            .min_by(|a, b| dist(a.1.location, x).total_cmp(&dist(b.1.location, x)))
            .filter(|(_, a)| dist(a.location, x) < 1e-5)
            .map(|(i, _)| i)
    }

    /// Attractor with the lowest stochastic potential.
    pub fn best(&self) -> Option<usize> {
        (0..self.attractors.len()).min_by(|&a, &b| self.peaks.potential[a].total_cmp(&self.peaks.potential[b]))
    }

    pub fn preference(&self, i: usize) -> Preference {
        match self.attractors[i].zone(self.beta) {
            Some(m) => Preference::Market(m),
            None => Preference::Indifferent,
        }
    }

    pub fn code(&self) -> TriangleCode {
        if !self.peaks.converged {
            return TriangleCode::Undetermined("action minimisation did not converge".into());
        }
        if self.peaks.fragmentation == Fragmentation::Undetermined {
            return TriangleCode::Undetermined("attractors not connected by saddles".into());
        }
        let entries = (0..self.attractors.len())
            .map(|i| CodeEntry {
                preference: self.preference(i),
                size: self.peaks.sizes[i],
            })
            .collect();
        TriangleCode::from_entries(entries)
            .unwrap_or_else(|e| TriangleCode::Undetermined(e.to_string()))
    }
}

/// Classes sharing their population between two attractors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mixture {
    pub classes: Vec<usize>,
    /// Share of each listed class on its second peak.
    pub weight: f64,
    /// Per listed class: (original peak, second peak).
    pub peaks: Vec<(Vec2, Vec2)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SteadyState {
    pub f: Vec<f64>,
    /// Location of the peak every class occupies (the first one for mixed
    /// classes).
    pub occupied: Vec<Vec2>,
    pub classes: Vec<ClassAnalysis>,
    pub codes: Vec<TriangleCode>,
    /// Set when no homogeneous state is consistent and the population splits.
    pub mixture: Option<Mixture>,
    /// Every occupied peak is large at the homogeneous aggregates.
    pub homogeneous_consistent: bool,
}

impl SteadyState {
    pub fn strong(&self) -> bool {
        self.codes.iter().any(|c| c.fragmentation() == Fragmentation::Strong)
    }
}

fn all_undetermined(n: usize, why: &str) -> Vec<TriangleCode> {
    vec![TriangleCode::Undetermined(why.to_string()); n]
}

fn markets_identical(sys: &MarketSystem) -> bool {
    sys.markets.iter().all(|m| m.theta == sys.markets[0].theta)
}

/// Triangle codes of every class in the steady state.
///
/// Aggregates come from the self-consistent homogeneous population (or from
/// symmetry). If some class sits on a peak that is exponentially small at
/// those aggregates, the homogeneous assumption is inconsistent; with
/// `opts.mixture` the population is then split between that peak and the
/// class's best one, with the share chosen so both potentials balance.
pub fn classify_steady_state(sys: &MarketSystem, opts: &PhaseOptions) -> Result<SteadyState> {
    let n = sys.classes.len();
    let (x, f) = match sys.self_consistent() {
        Ok(v) => v,
        Err(e) => {
            return Ok(SteadyState {
                f: vec![],
                occupied: vec![],
                classes: vec![],
                codes: all_undetermined(n, &e.to_string()),
                mixture: None,
                homogeneous_consistent: false,
            })
        }
    };
    let analyses = analyse_all(sys, &f, opts)?;
    let mut homes = Vec::with_capacity(n);
    for (c, a) in analyses.iter().enumerate() {
        homes.push(a.attractor_at(x[c]));
    }
    let mut codes: Vec<TriangleCode> = analyses.iter().map(|a| a.code()).collect();
    // identical markets: f = 1 by symmetry and any symmetric split over the
    // large peaks leaves it unchanged, so the occupied state is irrelevant
    let symmetric = markets_identical(sys);
    if symmetric {
        homes.iter_mut().for_each(|h| *h = None);
    } else if let Some(c) = homes.iter().position(|h| h.is_none()) {
        codes[c] = TriangleCode::Undetermined("occupied state is not an attractor".into());
    }
    let inconsistent: Vec<usize> = (0..n)
        .filter(|&c| match homes[c] {
            Some(h) => analyses[c].peaks.sizes[h] == PeakSize::Small,
            None => false,
        })
        .collect();
    let consistent = inconsistent.is_empty() || symmetric;
    let mut state = SteadyState {
        f: f.clone(),
        occupied: x.clone(),
        classes: analyses,
        codes,
        mixture: None,
        homogeneous_consistent: consistent,
    };
    if consistent || symmetric || homes.iter().any(|h| h.is_none()) {
        return Ok(state);
    }
    if !opts.mixture {
        for &c in &inconsistent {
            state.codes[c] = TriangleCode::Undetermined("homogeneous state inconsistent".into());
        }
        return Ok(state);
    }
    // without the mirror symmetry only the most inconsistent class splits;
    // the final consistency check covers the others
    let mixed = if sys.is_exchange_symmetric() {
        inconsistent.clone()
    } else {
        let deficit = |c: usize| state.classes[c].peaks.deficit(homes[c].unwrap());
        vec![*inconsistent
            .iter()
            .max_by(|&&a, &&b| deficit(a).total_cmp(&deficit(b)))
            .unwrap()]
    };
    match resolve_mixture(sys, &x, &state.classes, &mixed, opts) {
        Ok(s) => Ok(s),
        Err(Error::NonConvergence(why)) => {
            for &c in &inconsistent {
                state.codes[c] = TriangleCode::Undetermined(why.clone());
            }
            Ok(state)
        }
        Err(e) => Err(e),
    }
}

fn analyse_all(sys: &MarketSystem, f: &[f64], opts: &PhaseOptions) -> Result<Vec<ClassAnalysis>> {
    (0..sys.classes.len())
        .map(|c| ClassAnalysis::new(&sys.field(c, f)?, c, opts))
        .collect()
}

/// Positions tracked along the mixture branch.
#[derive(Clone, Debug)]
struct Branch {
    /// Occupied peak of every class.
    home: Vec<Vec2>,
    /// Second peak of the mixed classes, same order as `mixed`.
    second: Vec<Vec2>,
}

fn mixture_aggregates(sys: &MarketSystem, mixed: &[usize], w: f64, b: &Branch) -> Result<Vec<f64>> {
    let probs = |x: Vec2, c: usize| {
        DriftField::from_moments(sys.classes[c].beta, Default::default())
            .choice_probabilities(x)
            .to_vec()
    };
    let p: Vec<Vec<f64>> = (0..sys.classes.len())
        .map(|c| {
            let home = probs(b.home[c], c);
            match mixed.iter().position(|&m| m == c) {
                Some(k) => {
                    let other = probs(b.second[k], c);
                    home.iter().zip(&other).map(|(h, o)| (1.0 - w) * h + w * o).collect()
                }
                None => home,
            }
        })
        .collect();
    let agg = aggregates_from_choice(&p, &sys.classes, &sys.weights)?;
    agg.f
        .iter()
        .map(|v| v.filter(|v| *v > 0.0).ok_or_else(|| Error::NonConvergence("mixture aggregate undefined".into())))
        .collect()
}

fn lost(msg: &str) -> Error {
    Error::NonConvergence(format!("mixture branch lost: {msg}"))
}

/// Self-consistent aggregates with share `w` of the mixed classes on their
/// second peak, continued from `start`.
fn solve_branch(sys: &MarketSystem, mixed: &[usize], w: f64, start: &Branch) -> Result<(Vec<f64>, Branch)> {
    let mut b = start.clone();
    let mut f = mixture_aggregates(sys, mixed, w, &b)?;
    for _ in 0..2000 {
        let fields = sys.fields(&f)?;
        for (c, field) in fields.iter().enumerate() {
            b.home[c] = nearest_root(field, b.home[c]).map_err(|_| lost("peak vanished"))?;
        }
        for (k, &c) in mixed.iter().enumerate() {
            b.second[k] = nearest_root(&fields[c], b.second[k]).map_err(|_| lost("peak vanished"))?;
        }
        let target = mixture_aggregates(sys, mixed, w, &b)?;
        let change = f.iter().zip(&target).map(|(a, t)| (a - t).abs()).fold(0.0, f64::max);
        for (a, t) in f.iter_mut().zip(&target) {
            *a = 0.5 * *a + 0.5 * t;
        }
        if change < 1e-10 {
            let fields = sys.fields(&f)?;
            for (k, &c) in mixed.iter().enumerate() {
                let p = FixedPoint::classify(&fields[c], b.second[k], c, 1e-6);
                let h = FixedPoint::classify(&fields[c], b.home[c], c, 1e-6);
                if dist(b.home[c], b.second[k]) < 1e-6
                    || p.stability != Stability::Stable
                    || h.stability != Stability::Stable
                {
                    return Err(lost("peaks merged"));
                }
            }
            return Ok((f, b));
        }
    }
    Err(Error::NonConvergence("mixture aggregates".into()))
}

/// Potential of the second peak minus that of the occupied one, for the
/// first mixed class, plus the full analyses.
fn balance(
    sys: &MarketSystem,
    mixed: &[usize],
    f: &[f64],
    b: &Branch,
    opts: &PhaseOptions,
) -> Result<(f64, Vec<ClassAnalysis>)> {
    let analyses = analyse_all(sys, f, opts)?;
    let c = mixed[0];
    let a = &analyses[c];
    let (h, s) = match (a.attractor_at(b.home[c]), a.attractor_at(b.second[0])) {
        (Some(h), Some(s)) => (h, s),
        _ => return Err(lost("peak not found by root search")),
    };
    let g = a.peaks.potential[s] - a.peaks.potential[h];
    if !g.is_finite() {
        return Err(lost("peaks not connected"));
    }
    Ok((g, analyses))
}

fn resolve_mixture(
    sys: &MarketSystem,
    x: &[Vec2],
    analyses: &[ClassAnalysis],
    mixed: &[usize],
    opts: &PhaseOptions,
) -> Result<SteadyState> {
    let second: Vec<Vec2> = mixed
        .iter()
        .map(|&c| {
            let a = &analyses[c];
            a.best().map(|i| a.attractors[i].location).ok_or_else(|| lost("no attractor"))
        })
        .collect::<Result<_>>()?;
    let mut branch = Branch {
        home: x.to_vec(),
        second,
    };
    let step = opts.mixture_step.clamp(1e-3, 0.5);
    let mut w_lo = 0.0;
    let mut lo_branch = branch.clone();
    let mut found = None;
    while w_lo < 1.0 {
        let w = (w_lo + step).min(1.0);
        let (f, b) = solve_branch(sys, mixed, w, &lo_branch)?;
        let (g, an) = balance(sys, mixed, &f, &b, opts)?;
        if g >= 0.0 {
            found = Some((w, b, f, g, an));
            break;
        }
        w_lo = w;
        lo_branch = b;
        branch = lo_branch.clone();
    }
    let (mut w_hi, mut hi_branch, mut f, mut g, mut an) = match found {
        Some(v) => v,
        // the whole class moves over: homogeneous again, at the better peak
        None => {
            let (f, b) = solve_branch(sys, mixed, 1.0, &branch)?;
            let an = analyse_all(sys, &f, opts)?;
            return finish(sys, mixed, 1.0, f, b, an, opts);
        }
    };
    let eps = crate::fw::epsilon_s(opts.r);
    while g.abs() > 0.1 * eps && w_hi - w_lo > 1e-6 {
        let w = 0.5 * (w_lo + w_hi);
        let (fm, bm) = solve_branch(sys, mixed, w, &lo_branch)?;
        let (gm, am) = balance(sys, mixed, &fm, &bm, opts)?;
        if gm >= 0.0 {
            w_hi = w;
            hi_branch = bm;
            f = fm;
            g = gm;
            an = am;
        } else {
            w_lo = w;
            lo_branch = bm;
            if gm.abs() <= 0.1 * eps {
                w_hi = w;
                hi_branch = lo_branch.clone();
                f = fm;
                g = gm;
                an = am;
            }
        }
    }
    finish(sys, mixed, w_hi, f, hi_branch, an, opts)
}

fn finish(
    sys: &MarketSystem,
    mixed: &[usize],
    w: f64,
    f: Vec<f64>,
    b: Branch,
    analyses: Vec<ClassAnalysis>,
    opts: &PhaseOptions,
) -> Result<SteadyState> {
    let _ = opts;
    let mut codes: Vec<TriangleCode> = analyses.iter().map(|a| a.code()).collect();
    for (c, a) in analyses.iter().enumerate() {
        let mut occupied = vec![b.home[c]];
        if let Some(k) = mixed.iter().position(|&m| m == c) {
            if w >= 1.0 {
                occupied = vec![b.second[k]];
            } else {
                occupied.push(b.second[k]);
            }
        }
        for x in occupied {
            match a.attractor_at(x) {
                Some(i) if a.peaks.sizes[i] == PeakSize::Large => {}
                _ => codes[c] = TriangleCode::Undetermined("mixture state inconsistent".into()),
            }
        }
    }
    let occupied = (0..sys.classes.len())
        .map(|c| match mixed.iter().position(|&m| m == c) {
            Some(k) if w >= 1.0 => b.second[k],
            _ => b.home[c],
        })
        .collect();
    let mixture = (w < 1.0).then(|| Mixture {
        classes: mixed.to_vec(),
        weight: w,
        peaks: mixed.iter().enumerate().map(|(k, &c)| (b.home[c], b.second[k])).collect(),
    });
    Ok(SteadyState {
        f,
        occupied,
        classes: analyses,
        codes,
        mixture,
        homogeneous_consistent: false,
    })
}

/// Parametrisations of the market biases used for phase diagrams.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// (i): theta_2 = 1/2, theta_1 = 1 - theta_3; the axis is theta_3.
    #[serde(alias = "i")]
    SymmetricFair,
    /// (ii): theta_1 = 0.3, theta_3 = 0.7; the axis is theta_2.
    #[serde(alias = "ii")]
    TwoSymmetricFree,
    /// (iii): theta_1 = 0.3, theta_2 = 0.5; the axis is theta_3.
    #[serde(alias = "iii")]
    FixedPairFree,
}

impl Scenario {
    pub fn thetas(&self, x: f64) -> [f64; 3] {
        match self {
            Self::SymmetricFair => [1.0 - x, 0.5, x],
            Self::TwoSymmetricFree => [0.3, x, 0.7],
            Self::FixedPairFree => [0.3, 0.5, x],
        }
    }

    pub fn axis(&self) -> &'static str {
        match self {
            Self::SymmetricFair | Self::FixedPairFree => "theta_3",
            Self::TwoSymmetricFree => "theta_2",
        }
    }

    pub fn system(&self, x: f64, inv_beta: f64, base: &SweepBase) -> Result<MarketSystem> {
        MarketSystem::new(
            MarketSpec::list(&self.thetas(x))?,
            base.p_buy
                .iter()
                .map(|&p| TraderClassSpec::new(p, 1.0 / inv_beta, base.r))
                .collect::<Result<_>>()?,
            vec![1.0; base.p_buy.len()],
            base.dist,
        )
    }
}

/// Everything held fixed across a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepBase {
    pub p_buy: Vec<f64>,
    pub r: f64,
    pub dist: OrderDistribution,
}

impl Default for SweepBase {
    fn default() -> Self {
        Self {
            p_buy: vec![0.8, 0.2],
            r: 0.01,
            dist: OrderDistribution::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOptions {
    pub bias: (f64, f64, usize),
    pub inv_beta: (f64, f64, usize),
    /// Width in 1/beta to which boundaries are bisected.
    pub refine_tol: f64,
    pub phase: PhaseOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            bias: (0.1, 0.9, 40),
            inv_beta: (0.15, 0.35, 40),
            refine_tol: 1e-4,
            phase: PhaseOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseNode {
    pub bias: f64,
    pub inv_beta: f64,
    pub f: Vec<f64>,
    pub codes: Vec<TriangleCode>,
    pub strong: bool,
    pub mixed: bool,
}

/// A label change between two nodes adjacent in 1/beta, bisected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    pub bias: f64,
    pub class: usize,
    pub inv_beta_lo: f64,
    pub inv_beta_hi: f64,
    /// Code on the high-1/beta side and on the low side.
    pub above: String,
    pub below: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagram {
    pub scenario: Scenario,
    pub biases: Vec<f64>,
    pub inv_betas: Vec<f64>,
    /// Row-major: one row per bias value.
    pub nodes: Vec<PhaseNode>,
    pub boundaries: Vec<Boundary>,
}

impl PhaseDiagram {
    pub fn node(&self, bias: usize, inv_beta: usize) -> &PhaseNode {
        &self.nodes[bias * self.inv_betas.len() + inv_beta]
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![lo];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

fn node_at(scenario: Scenario, bias: f64, inv_beta: f64, base: &SweepBase, opts: &PhaseOptions) -> Result<PhaseNode> {
    let sys = scenario.system(bias, inv_beta, base)?;
    let s = classify_steady_state(&sys, opts)?;
    Ok(PhaseNode {
        bias,
        inv_beta,
        strong: s.strong() || (!s.homogeneous_consistent && s.mixture.is_some()),
        mixed: s.mixture.is_some(),
        f: s.f,
        codes: s.codes,
    })
}

/// Classifies every node of the (bias, 1/beta) grid and bisects each label
/// change along the 1/beta axis.
pub fn sweep_phase_diagram(scenario: Scenario, base: &SweepBase, opts: &SweepOptions) -> Result<PhaseDiagram> {
    let biases = linspace(opts.bias.0, opts.bias.1, opts.bias.2);
    let inv_betas = linspace(opts.inv_beta.0, opts.inv_beta.1, opts.inv_beta.2);
    let cells: Vec<(f64, f64)> = biases
        .iter()
        .flat_map(|&b| inv_betas.iter().map(move |&i| (b, i)))
        .collect();
    let nodes: Vec<PhaseNode> = cells
        .par_iter()
        .map(|&(b, i)| node_at(scenario, b, i, base, &opts.phase))
        .collect::<Result<_>>()?;

    let nb = inv_betas.len();
    let jobs: Vec<(usize, usize, usize)> = (0..biases.len())
        .flat_map(|bi| (1..nb).map(move |k| (bi, k)))
        .flat_map(|(bi, k)| {
            let (a, b) = (&nodes[bi * nb + k - 1], &nodes[bi * nb + k]);
            (0..a.codes.len())
                .filter(|&c| a.codes[c] != b.codes[c] && a.codes[c].is_determined() && b.codes[c].is_determined())
                .map(move |c| (bi, k, c))
                .collect::<Vec<_>>()
        })
        .collect();
    let boundaries: Vec<Boundary> = jobs
        .par_iter()
        .map(|&(bi, k, c)| {
            let (lo, hi) = (inv_betas[k - 1].min(inv_betas[k]), inv_betas[k - 1].max(inv_betas[k]));
            let probe = |ib: f64| -> Result<TriangleCode> {
                Ok(node_at(scenario, biases[bi], ib, base, &opts.phase)?.codes[c].clone())
            };
            let (l, h) = bisect(lo, hi, opts.refine_tol, probe)?;
            let above = probe(h)?.to_string();
            let below = probe(l)?.to_string();
            Ok(Boundary {
                bias: biases[bi],
                class: c,
                inv_beta_lo: l,
                inv_beta_hi: h,
                above,
                below,
            })
        })
        .collect::<Result<_>>()?;
    Ok(PhaseDiagram {
        scenario,
        biases,
        inv_betas,
        nodes,
        boundaries,
    })
}

/// Attractors of one class per preferred market at the homogeneous
/// aggregates; index 3 counts indifferent ones.
pub fn attractor_zones(sys: &MarketSystem, opts: &RootOptions) -> Result<Vec<[usize; 4]>> {
    let (_, f) = sys.self_consistent()?;
    (0..sys.classes.len())
        .map(|c| {
            let field = sys.field(c, &f)?;
            let roots = fixed_points(&field, c, opts);
            let mut z = [0; 4];
            for p in roots.attractors() {
                z[p.zone(field.beta).unwrap_or(3)] += 1;
            }
            Ok(z)
        })
        .collect()
}

/// First appearance of an attractor of `class` preferring `market` as beta
/// grows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakOnset {
    pub class: usize,
    pub market: usize,
    pub inv_beta_lo: f64,
    pub inv_beta_hi: f64,
}

impl PeakOnset {
    pub fn inv_beta(&self) -> f64 {
        0.5 * (self.inv_beta_lo + self.inv_beta_hi)
    }
}

/// Scans 1/beta downwards and bisects the first appearance of an attractor
/// in every (class, market) zone that starts out empty.
pub fn peak_onsets(
    system_at: impl Fn(f64) -> Result<MarketSystem> + Sync,
    inv_beta_lo: f64,
    inv_beta_hi: f64,
    samples: usize,
    tol: f64,
    opts: &RootOptions,
) -> Result<Vec<PeakOnset>> {
    let grid = linspace(inv_beta_hi, inv_beta_lo, samples.max(2));
    let zones: Vec<Vec<[usize; 4]>> = grid
        .par_iter()
        .map(|&ib| attractor_zones(&system_at(ib)?, opts))
        .collect::<Result<_>>()?;
    let classes = zones[0].len();
    let mut out = Vec::new();
    for c in 0..classes {
        for m in 0..3 {
            if zones[0][c][m] > 0 {
                continue;
            }
            let Some(k) = (1..grid.len()).find(|&k| zones[k][c][m] > 0) else {
                continue;
            };
            let probe = |ib: f64| -> Result<bool> { Ok(attractor_zones(&system_at(ib)?, opts)?[c][m] > 0) };
            let (lo, hi) = bisect(grid[k], grid[k - 1], tol, probe)?;
            out.push(PeakOnset {
                class: c,
                market: m,
                inv_beta_lo: lo,
                inv_beta_hi: hi,
            });
        }
    }
    out.sort_by(|a, b| b.inv_beta().total_cmp(&a.inv_beta()));
    Ok(out)
}

/// The three fair-market transitions, all in 1/beta.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FairThresholds {
    /// Saddle-node onset per outer market.
    pub onsets: [f64; 3],
    /// Largest pairwise difference between the onsets.
    pub spread: f64,
    /// Outer peaks appear (beta_c).
    pub inv_beta_c: f64,
    /// Centre and outer peaks exchange weight (beta_c').
    pub inv_beta_c_prime: f64,
    /// The centre stops being an attractor (beta_c'').
    pub inv_beta_c_double_prime: f64,
    /// Non-repelling fixed points in each regime, from small beta up.
    pub counts: [usize; 4],
    pub report: ThresholdReport,
}

impl FairThresholds {
    pub fn ordered(&self) -> bool {
        self.inv_beta_c > self.inv_beta_c_prime && self.inv_beta_c_prime > self.inv_beta_c_double_prime
    }
}

/// Drift field of a class in three fair markets at `f = 1`.
pub fn fair_field(p_buy: f64, inv_beta: f64, dist: &OrderDistribution) -> Result<DriftField> {
    let class = TraderClassSpec::new(p_buy, 1.0 / inv_beta, 0.01)?;
    DriftField::new(&class, &[MarketSpec::fair(); 3], &[1.0; 3], dist)
}

fn non_repelling(s: &RootSearch) -> usize {
    s.points.iter().filter(|p| p.stability != Stability::Unstable).count()
}

/// Locates beta_c, beta_c' and beta_c'' for three fair markets, where
/// symmetry fixes `f = 1`.
pub fn fair_market_thresholds(
    p_buy: f64,
    dist: &OrderDistribution,
    inv_beta_lo: f64,
    inv_beta_hi: f64,
    samples: usize,
    tol: f64,
    opts: &PhaseOptions,
) -> Result<FairThresholds> {
    let field_at = |ib: f64| fair_field(p_buy, ib, dist);
    let report = crate::bifurcation::scan_thresholds(field_at, inv_beta_lo, inv_beta_hi, samples, tol, &opts.roots)?;
    let mut onsets = [f64::NAN; 3];
    for (m, o) in onsets.iter_mut().enumerate() {
        let t = report
            .find(&format!("zone {} attractors", m + 1))
            .ok_or_else(|| Error::NoTransition {
                lo: inv_beta_lo,
                hi: inv_beta_hi,
            })?;
        *o = t.inv_beta();
    }
    let spread = onsets.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - onsets.iter().cloned().fold(f64::INFINITY, f64::min);
    let inv_beta_c = onsets.iter().sum::<f64>() / 3.0;
    let centre = report.find("central stability").ok_or(Error::NoTransition {
        lo: inv_beta_lo,
        hi: inv_beta_hi,
    })?;
    let inv_beta_c_double_prime = centre.inv_beta();

    // centre minus outer potential; negative while the centre dominates
    let gap = |ib: f64| -> Result<bool> {
        let a = ClassAnalysis::new(&field_at(ib)?, 0, opts)?;
        let centre = (0..a.attractors.len())
            .find(|&i| a.preference(i) == Preference::Indifferent)
            .ok_or_else(|| Error::NonConvergence("centre attractor missing".into()))?;
        let outer = (0..a.attractors.len())
            .find(|&i| i != centre)
            .ok_or_else(|| Error::NonConvergence("outer attractor missing".into()))?;
        let (wc, wo) = (a.peaks.potential[centre], a.peaks.potential[outer]);
        if !(wc.is_finite() && wo.is_finite()) {
            return Err(Error::NonConvergence(format!("fair attractors not connected at 1/beta = {ib}")));
        }
        Ok(wc > wo)
    };
    // saddles crowd the centre next to beta_c'' and the new attractors next
    // to beta_c, so keep the bracket off both ends
    let hi = inv_beta_c_double_prime + 0.25 * (inv_beta_c - inv_beta_c_double_prime);
    let lo_side = inv_beta_c - 0.05 * (inv_beta_c - inv_beta_c_double_prime);
    let (l, h) = bisect(hi, lo_side, tol, gap)?;
    let mut report = report;
    report.transitions.push(Transition {
        kind: TransitionKind::WeightExchange,
        label: "centre-outer balance".into(),
        inv_beta_lo: l,
        inv_beta_hi: h,
        before: "centre".into(),
        after: "outer".into(),
    });
    report
        .transitions
        .sort_by(|a, b| b.inv_beta().total_cmp(&a.inv_beta()));
    let inv_beta_c_prime = 0.5 * (l + h);

    let count_at = |ib: f64| -> Result<usize> { Ok(non_repelling(&fixed_points(&field_at(ib)?, 0, &opts.roots))) };
    let probes = [
        inv_beta_c + 0.5 * (inv_beta_hi - inv_beta_c),
        0.5 * (inv_beta_c + inv_beta_c_prime),
        0.5 * (inv_beta_c_prime + inv_beta_c_double_prime),
        inv_beta_c_double_prime - 0.5 * (inv_beta_c_double_prime - inv_beta_lo),
    ];
    let mut counts = [0; 4];
    for (c, ib) in counts.iter_mut().zip(probes) {
        *c = count_at(ib)?;
    }
    Ok(FairThresholds {
        onsets,
        spread,
        inv_beta_c,
        inv_beta_c_prime,
        inv_beta_c_double_prime,
        counts,
        report,
    })
}

/// Single factor `s` minimising the worst relative error of
/// `s * measured[i]` against `target[i]`; returns `(s, worst error)`.
pub fn calibrate_scale(measured: &[f64], target: &[f64]) -> (f64, f64) {
    let err = |s: f64| {
        measured
            .iter()
            .zip(target)
            .map(|(m, t)| ((s * m - t) / t).abs())
            .fold(0.0, f64::max)
    };
    // the worst error is convex in s: golden-section search between the
    // extreme single-point fits
    let ratios: Vec<f64> = measured.iter().zip(target).map(|(m, t)| t / m).collect();
    let mut a = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut b = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if err(c) <= err(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let s = 0.5 * (a + b);
    (s, err(s))
}

/// Loyalty-group counts per class in a market system.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FragmentationPattern {
    pub eta: Vec<usize>,
    pub markets: usize,
}

impl FragmentationPattern {
    pub fn new(eta: Vec<usize>, markets: usize) -> Result<Self> {
        if eta.is_empty() {
            return Err(invalid("at least one class required"));
        }
        if let Some(e) = eta.iter().find(|&&e| e < 1 || e > markets) {
            return Err(invalid(format!("group count {e} outside [1, {markets}]")));
        }
        Ok(Self { eta, markets })
    }

    pub fn classes(&self) -> usize {
        self.eta.len()
    }

    pub fn groups(&self) -> usize {
        self.eta.iter().sum()
    }

    /// Preferred-market sets of different classes can be pairwise disjoint.
    pub fn disjoint_possible(&self) -> bool {
        self.groups() <= self.markets
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Feasibility {
    UniquelyDetermined,
    Underdetermined,
    Overdetermined,
}

/// Free peak weights `sum(eta - 1)` against the `M` aggregate equations.
/// More loyalty groups than `M + C` cannot be sustained generically
/// (overdetermined); fewer leave the weights underdetermined.
pub fn counting_feasibility(p: &FragmentationPattern) -> Feasibility {
    match p.groups().cmp(&(p.markets + p.classes())) {
        std::cmp::Ordering::Equal => Feasibility::UniquelyDetermined,
        std::cmp::Ordering::Greater => Feasibility::Overdetermined,
        std::cmp::Ordering::Less => Feasibility::Underdetermined,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasiblePatterns {
    pub patterns: Vec<FragmentationPattern>,
    /// No feasible pattern allows disjoint preferred-market sets.
    pub disjoint_impossible: bool,
}

/// All group-count vectors whose weights are uniquely determined.
pub fn enumerate_feasible_patterns(markets: usize, classes: usize) -> Result<FeasiblePatterns> {
    if markets < 2 || classes < 1 {
        return Err(invalid("need at least two markets and one class"));
    }
    let mut patterns = Vec::new();
    let mut eta = vec![1usize; classes];
    loop {
        let p = FragmentationPattern {
            eta: eta.clone(),
            markets,
        };
        if counting_feasibility(&p) == Feasibility::UniquelyDetermined {
            patterns.push(p);
        }
        let mut i = 0;
        while i < classes {
            eta[i] += 1;
            if eta[i] <= markets {
                break;
            }
            eta[i] = 1;
            i += 1;
        }
        if i == classes {
            break;
        }
    }
    let disjoint_impossible = patterns.iter().all(|p| !p.disjoint_possible());
    Ok(FeasiblePatterns {
        patterns,
        disjoint_impossible,
    })
}

/// Every class split over every market.
pub fn full_fragmentation(markets: usize, classes: usize) -> Feasibility {
    counting_feasibility(&FragmentationPattern {
        eta: vec![markets; classes],
        markets,
    })
}
