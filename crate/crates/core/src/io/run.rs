//! The six commands and the result bundle they produce.

use std::fmt;
use std::path::Path as FsPath;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bifurcation::{fixed_points, search_half_width};
use crate::error::{Error, Result};
use crate::fw::minimize_action;
use crate::phases::{
    enumerate_feasible_patterns, fair_market_thresholds, full_fragmentation, peak_onsets, sweep_phase_diagram,
    ClassAnalysis, PhaseOptions,
};
use crate::rng::replica_seed;
use crate::simulate::{run_series, run_to_steady_state};
use crate::theory::MarketSystem;

use super::config::RunConfig;
use super::svg;
use super::table::{self, num, Table};

/// Bumped whenever a table schema or the numerics behind it change.
pub const ARTIFACT_VERSION: &str = concat!("market-frag ", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verb {
    Simulate,
    Flow,
    Thresholds,
    Action,
    Phase,
    Count,
}

impl Verb {
    pub const ALL: [Verb; 6] = [
        Verb::Simulate,
        Verb::Flow,
        Verb::Thresholds,
        Verb::Action,
        Verb::Phase,
        Verb::Count,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Verb::Simulate => "simulate",
            Verb::Flow => "flow",
            Verb::Thresholds => "thresholds",
            Verb::Action => "action",
            Verb::Phase => "phase",
            Verb::Count => "count",
        }
    }
}

impl fmt::Display for Verb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Verb {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Verb::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown command {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub file: String,
    /// Data rows for tables, absent for figures.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub command: Verb,
    pub seed: u64,
    /// `complete`, or `partial` when the command failed midway.
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub artifacts: Vec<Artifact>,
    /// Full configuration with every default filled in.
    pub config: RunConfig,
}

impl Manifest {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest always serialises")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Figure {
    pub name: String,
    pub svg: String,
}

#[derive(Debug)]
pub struct ResultBundle {
    pub manifest: Manifest,
    pub tables: Vec<Table>,
    pub figures: Vec<Figure>,
    /// Why the command stopped early; the outputs so far are kept.
    pub failure: Option<Error>,
}

impl ResultBundle {
    fn new(verb: Verb, cfg: &RunConfig) -> Self {
        Self {
            manifest: Manifest {
                version: ARTIFACT_VERSION.into(),
                command: verb,
                seed: cfg.seed,
                status: "complete".into(),
                error: None,
                artifacts: Vec::new(),
                config: cfg.clone(),
            },
            tables: Vec::new(),
            figures: Vec::new(),
            failure: None,
        }
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    fn add_table(&mut self, t: Table) {
        self.manifest.artifacts.push(Artifact {
            file: t.file_name(),
            rows: Some(t.rows.len()),
        });
        self.tables.push(t);
    }

    fn add_figure(&mut self, name: impl Into<String>, svg: String) {
        let name = name.into();
        self.manifest.artifacts.push(Artifact {
            file: format!("{name}.svg"),
            rows: None,
        });
        self.figures.push(Figure { name, svg });
    }

    /// Writes every table, figure and `manifest.toml` into `dir`.
    pub fn write(&self, dir: &FsPath) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for t in &self.tables {
            t.write(dir)?;
        }
        for f in &self.figures {
            std::fs::write(dir.join(format!("{}.svg", f.name)), &f.svg)?;
        }
        std::fs::write(dir.join("manifest.toml"), self.manifest.to_toml())?;
        Ok(())
    }
}

/// Runs `verb` on a validated configuration. Failures are recorded in the
/// bundle, which keeps whatever was produced before the failure.
pub fn run_command(verb: Verb, cfg: &RunConfig) -> ResultBundle {
    let mut b = ResultBundle::new(verb, cfg);
    let res = cfg.validate().and_then(|_| match verb {
        Verb::Simulate => simulate(cfg, &mut b),
        Verb::Flow => flow(cfg, &mut b),
        Verb::Thresholds => thresholds(cfg, &mut b),
        Verb::Action => action(cfg, &mut b),
        Verb::Phase => phase(cfg, &mut b),
        Verb::Count => count(cfg, &mut b),
    });
    if let Err(e) = res {
        b.manifest.status = "partial".into();
        b.manifest.error = Some(e.to_string());
        b.failure = Some(e);
    }
    b
}

fn simulate(cfg: &RunConfig, b: &mut ResultBundle) -> Result<()> {
    let sim = cfg.simulation()?;
    let Some(rounds) = cfg.simulate.rounds else {
        let s = run_to_steady_state(sim)?;
        let mut summary = Table::new("steady_state", ["rounds", "converged"]);
        summary.push(vec![s.rounds.to_string(), s.converged.to_string()]);
        b.add_table(summary);
        let series = table::series_table("series", &s.series);
        b.add_figure("series", svg::series(&[&series], None, "f_1", "aggregate f_1")?);
        b.add_table(series);
        b.add_table(table::peaks_table("peaks", &s.peaks));
        for h in &s.histograms {
            let c = h.class_id + 1;
            let t = table::histogram_table(&format!("histogram_class{c}"), h);
            b.add_figure(format!("heatmap_class{c}"), svg::heatmap(&t, &format!("class {c}"))?);
            b.add_table(t);
        }
        return Ok(());
    };
    let mut runs = Vec::new();
    for k in 0..cfg.simulate.replicas {
        let mut c = sim.clone();
        if cfg.simulate.replicas > 1 {
            c.seed = replica_seed(cfg.seed, k);
        }
        let name = if cfg.simulate.replicas > 1 { format!("series_replica{}", k + 1) } else { "series".into() };
        runs.push(table::series_table(&name, &run_series(c, rounds)?));
    }
    let mut traj = None;
    if cfg.markets.len() == 3 {
        let sys = cfg.system()?;
        let dt = sim.time_step();
        let start = vec![[0.0, 0.0]; sys.classes.len()];
        traj = Some(table::trajectory_table("homogeneous", &sys.trajectory(&start, dt, rounds as f64 * dt)?));
    }
    let refs: Vec<&Table> = runs.iter().collect();
    for m in 1..=cfg.markets.len() {
        let col = format!("f_{m}");
        b.add_figure(format!("series_f{m}"), svg::series(&refs, traj.as_ref(), &col, &format!("aggregate {col}"))?);
    }
    for t in runs {
        b.add_table(t);
    }
    if let Some(t) = traj {
        b.add_table(t);
    }
    Ok(())
}

fn aggregates(cfg: &RunConfig, sys: &MarketSystem) -> Result<Vec<f64>> {
    match &cfg.flow.aggregates {
        Some(f) => Ok(f.clone()),
        None => Ok(sys.self_consistent()?.1),
    }
}

fn aggregates_table(thetas: &[f64], f: &[f64]) -> Table {
    let mut t = Table::new("aggregates", ["market", "theta", "f"]);
    for (m, (th, v)) in thetas.iter().zip(f).enumerate() {
        t.push(vec![(m + 1).to_string(), num(*th), num(*v)]);
    }
    t
}

fn flow(cfg: &RunConfig, b: &mut ResultBundle) -> Result<()> {
    let sys = cfg.system()?;
    let f = aggregates(cfg, &sys)?;
    b.add_table(aggregates_table(&cfg.markets, &f));
    let mut flows = table::flow_table("flow");
    let mut points = table::fixed_point_table("fixed_points");
    for c in 0..sys.classes.len() {
        let field = sys.field(c, &f)?;
        let half = cfg.flow.half_width.unwrap_or_else(|| search_half_width(&field));
        table::flow_rows(&mut flows, c, &field, half, cfg.flow.grid);
        table::fixed_point_rows(&mut points, &fixed_points(&field, c, &cfg.roots.options()), field.beta);
    }
    for c in 0..sys.classes.len() {
        let title = format!("class {}, 1/beta = {}", c + 1, num(1.0 / sys.classes[c].beta));
        b.add_figure(format!("flow_class{}", c + 1), svg::flow(&flows, &points, None, c, &title)?);
    }
    b.add_table(flows);
    b.add_table(points);
    Ok(())
}

fn thresholds(cfg: &RunConfig, b: &mut ResultBundle) -> Result<()> {
    let t = &cfg.thresholds;
    if cfg.markets.len() == 3 && cfg.markets.iter().all(|&x| x == 0.5) {
        let opts = PhaseOptions {
            roots: cfg.roots.options(),
            action: cfg.action.options(),
            ..PhaseOptions::default()
        };
        let fair = fair_market_thresholds(cfg.classes[0].p_buy, &cfg.orders, t.inv_beta_lo, t.inv_beta_hi, t.samples, t.tol, &opts)?;
        b.add_table(table::fair_table("fair_thresholds", &fair));
        b.add_table(table::transitions_table("transitions", &fair.report));
        return Ok(());
    }
    let base = cfg.system()?;
    let at = |ib: f64| -> Result<MarketSystem> { Ok(base.with_beta(1.0 / ib)) };
    let onsets = peak_onsets(at, t.inv_beta_lo, t.inv_beta_hi, t.samples, t.tol, &cfg.roots.options())?;
    b.add_table(table::onsets_table("onsets", &onsets));
    Ok(())
}

fn action(cfg: &RunConfig, b: &mut ResultBundle) -> Result<()> {
    let sys = cfg.system()?;
    let f = aggregates(cfg, &sys)?;
    b.add_table(aggregates_table(&cfg.markets, &f));
    let aopts = cfg.action.options();
    let mut attractors = table::attractors_table("attractors");
    let mut edges = table::edges_table("edges");
    let mut paths = table::paths_table("paths");
    let mut points = table::fixed_point_table("fixed_points");
    let mut codes = Table::new("codes", ["class", "code", "fragmentation", "converged"]);
    let mut flows = table::flow_table("flow");
    for c in 0..sys.classes.len() {
        let field = sys.field(c, &f)?;
        // classification at this class's own memory length
        let opts = PhaseOptions {
            r: sys.classes[c].r,
            ..cfg.phase_options()
        };
        let a = ClassAnalysis::new(&field, c, &opts)?;
        table::attractor_rows(&mut attractors, c, &a);
        table::fixed_point_rows(&mut points, &a.roots, field.beta);
        let code = a.code();
        codes.push(vec![
            (c + 1).to_string(),
            code.to_string(),
            format!("{:?}", a.peaks.fragmentation).to_lowercase(),
            a.peaks.converged.to_string(),
        ]);
        for (k, e) in a.peaks.edges.iter().enumerate() {
            let saddle = &a.roots.points[e.saddle];
            edges.push(table::edge_row(c, k, e, saddle.location));
            let r = minimize_action(&a.attractors[e.from], saddle, &field, &aopts)?;
            table::path_rows(&mut paths, c, k, &r.path);
        }
        table::flow_rows(&mut flows, c, &field, search_half_width(&field), cfg.flow.grid);
    }
    for c in 0..sys.classes.len() {
        let title = format!("class {} escape paths", c + 1);
        b.add_figure(format!("paths_class{}", c + 1), svg::flow(&flows, &points, Some(&paths), c, &title)?);
    }
    for t in [codes, attractors, edges, paths, points] {
        b.add_table(t);
    }
    Ok(())
}

fn phase(cfg: &RunConfig, b: &mut ResultBundle) -> Result<()> {
    let (base, opts) = cfg.sweep();
    let d = sweep_phase_diagram(cfg.phase.scenario, &base, &opts)?;
    let t = table::phase_table("phase", &d);
    let title = format!("{:?}", cfg.phase.scenario);
    b.add_figure("phase", svg::phase(&t, cfg.phase.scenario.axis(), &title)?);
    b.add_table(t);
    b.add_table(table::boundaries_table("boundaries", &d));
    Ok(())
}

fn count(cfg: &RunConfig, b: &mut ResultBundle) -> Result<()> {
    let m = cfg.count.markets.unwrap_or(cfg.markets.len());
    let c = cfg.count.classes.unwrap_or(cfg.classes.len());
    let feasible = enumerate_feasible_patterns(m, c)?;
    let mut summary = Table::new("count_summary", ["markets", "classes", "max_groups", "full_fragmentation", "disjoint_impossible"]);
    summary.push(vec![
        m.to_string(),
        c.to_string(),
        (m + c).to_string(),
        format!("{:?}", full_fragmentation(m, c)),
        feasible.disjoint_impossible.to_string(),
    ]);
    b.add_table(summary);
    b.add_table(table::patterns_table("patterns", &feasible));
    Ok(())
}
