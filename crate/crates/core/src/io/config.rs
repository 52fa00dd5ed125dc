//! Run configuration in TOML. See the README for the full grammar.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::auction::{MarketSpec, OrderDistribution};
use crate::bifurcation::RootOptions;
use crate::error::{Error, Result};
use crate::fw::ActionOptions;
use crate::learning::TraderClassSpec;
use crate::phases::{PhaseOptions, Scenario, SweepBase, SweepOptions};
use crate::simulate::{ClassPopulation, SimulationConfig};
use crate::theory::MarketSystem;

/// One trader class. Exactly one of `beta` and `inv_beta` must be given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassConfig {
    pub p_buy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inv_beta: Option<f64>,
    #[serde(default = "default_r")]
    pub r: f64,
    #[serde(default = "default_count")]
    pub count: usize,
}

fn default_r() -> f64 {
    0.01
}

fn default_count() -> usize {
    10_000
}

impl ClassConfig {
    pub fn beta(&self) -> f64 {
        match (self.beta, self.inv_beta) {
            (Some(b), _) => b,
            (None, Some(ib)) => 1.0 / ib,
            (None, None) => f64::NAN,
        }
    }

    pub fn spec(&self) -> Result<TraderClassSpec> {
        TraderClassSpec::new(self.p_buy, self.beta(), self.r).map_err(config_error)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateParams {
    pub max_rounds: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<u64>,
    pub tolerance: f64,
    pub bins: usize,
    /// Run exactly this many rounds per replica and write the aggregate
    /// series instead of running to the steady state.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rounds: Option<u64>,
    pub replicas: u64,
}

impl Default for SimulateParams {
    fn default() -> Self {
        Self {
            max_rounds: 50_000,
            window: None,
            tolerance: 0.01,
            bins: 200,
            rounds: None,
            replicas: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RootParams {
    pub grid: usize,
    pub merge_tol: f64,
    pub residual_tol: f64,
    pub fd_step: f64,
    pub max_iter: usize,
}

impl Default for RootParams {
    fn default() -> Self {
        let r = RootOptions::default();
        Self {
            grid: r.grid,
            merge_tol: r.merge_tol,
            residual_tol: r.residual_tol,
            fd_step: r.fd_step,
            max_iter: r.max_iter,
        }
    }
}

impl RootParams {
    pub fn options(&self) -> RootOptions {
        RootOptions {
            grid: self.grid,
            merge_tol: self.merge_tol,
            residual_tol: self.residual_tol,
            fd_step: self.fd_step,
            max_iter: self.max_iter,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowParams {
    /// Arrows per axis.
    pub grid: usize,
    /// Half-width of the plotted window; automatic when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    /// Fixed aggregates; the self-consistent ones when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aggregates: Option<Vec<f64>>,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            grid: 21,
            half_width: None,
            aggregates: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdParams {
    pub inv_beta_lo: f64,
    pub inv_beta_hi: f64,
    pub samples: usize,
    pub tol: f64,
}

impl Default for ThresholdParams {
    fn default() -> Self {
        Self {
            inv_beta_lo: 0.2,
            inv_beta_hi: 0.3,
            samples: 41,
            tol: 1e-5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActionParams {
    /// Path segments K.
    pub segments: usize,
    /// Path duration T.
    pub total_time: f64,
    pub grad_tol: f64,
    pub max_iter: usize,
}

impl Default for ActionParams {
    fn default() -> Self {
        let a = ActionOptions::default();
        Self {
            segments: a.segments,
            total_time: a.total_time,
            grad_tol: a.grad_tol,
            max_iter: a.max_iter,
        }
    }
}

impl ActionParams {
    pub fn options(&self) -> ActionOptions {
        ActionOptions {
            segments: self.segments,
            total_time: self.total_time,
            grad_tol: self.grad_tol,
            max_iter: self.max_iter,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseParams {
    pub scenario: Scenario,
    /// `[lo, hi, points]` along the bias axis.
    pub bias: (f64, f64, usize),
    /// `[lo, hi, points]` along 1/beta.
    pub inv_beta: (f64, f64, usize),
    pub refine_tol: f64,
    /// Memory parameter for the large/small split; 0 is the r -> 0 limit.
    pub r: f64,
    pub mixture: bool,
}

impl Default for PhaseParams {
    fn default() -> Self {
        let s = SweepOptions::default();
        Self {
            scenario: Scenario::SymmetricFair,
            bias: s.bias,
            inv_beta: s.inv_beta,
            refine_tol: s.refine_tol,
            r: s.phase.r,
            mixture: s.phase.mixture,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CountParams {
    /// Defaults to the number of configured markets.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub markets: Option<usize>,
    /// Defaults to the number of configured classes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classes: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Bias theta of every market.
    pub markets: Vec<f64>,
    pub classes: Vec<ClassConfig>,
    #[serde(default)]
    pub orders: OrderDistribution,
    #[serde(default)]
    pub roots: RootParams,
    #[serde(default)]
    pub simulate: SimulateParams,
    #[serde(default)]
    pub flow: FlowParams,
    #[serde(default)]
    pub thresholds: ThresholdParams,
    #[serde(default)]
    pub action: ActionParams,
    #[serde(default)]
    pub phase: PhaseParams,
    #[serde(default)]
    pub count: CountParams,
}

fn default_name() -> String {
    "run".into()
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn config_error(e: Error) -> Error {
    match e {
        Error::InvalidParameter(m) => Error::Config(m),
        e => e,
    }
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config(msg()))
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration always serialises")
    }

    /// Checks every invariant the configured modules rely on.
    pub fn validate(&self) -> Result<()> {
        check(self.markets.len() >= 2, || format!("need at least 2 markets, got {}", self.markets.len()))?;
        for &t in &self.markets {
            MarketSpec::new(t).map_err(config_error)?;
        }
        check(!self.classes.is_empty(), || "need at least one trader class".into())?;
        for (i, c) in self.classes.iter().enumerate() {
            check(c.beta.is_some() != c.inv_beta.is_some(), || {
                format!("class {}: give exactly one of beta and inv_beta", i + 1)
            })?;
            if let Some(ib) = c.inv_beta {
                check(ib > 0.0 && ib.is_finite(), || format!("class {}: inv_beta must be positive", i + 1))?;
            }
            c.spec()?;
            check(c.count > 0, || format!("class {}: count must be positive", i + 1))?;
        }
        self.orders.validate().map_err(config_error)?;
        self.simulation()?.validate().map_err(config_error)?;
        check(self.simulate.replicas >= 1, || "simulate.replicas must be at least 1".into())?;
        check(self.roots.grid >= 1, || "roots.grid must be positive".into())?;
        check(self.flow.grid >= 2, || "flow.grid must be at least 2".into())?;
        if let Some(h) = self.flow.half_width {
            check(h > 0.0, || "flow.half_width must be positive".into())?;
        }
        if let Some(f) = &self.flow.aggregates {
            check(f.len() == self.markets.len() && f.iter().all(|v| *v > 0.0), || {
                "flow.aggregates needs one positive value per market".into()
            })?;
        }
        let t = &self.thresholds;
        check(0.0 < t.inv_beta_lo && t.inv_beta_lo < t.inv_beta_hi, || {
            "thresholds: need 0 < inv_beta_lo < inv_beta_hi".into()
        })?;
        check(t.samples >= 2 && t.tol > 0.0, || "thresholds: need samples >= 2 and tol > 0".into())?;
        check(self.action.segments >= 2 && self.action.total_time > 0.0, || {
            "action: need segments >= 2 and total_time > 0".into()
        })?;
        let p = &self.phase;
        check(p.bias.0 <= p.bias.1 && p.bias.2 >= 1, || "phase.bias must be [lo, hi, points]".into())?;
        check(0.0 <= p.bias.0 && p.bias.1 <= 1.0, || "phase.bias: theta out of [0,1]".into())?;
        check(
            0.0 < p.inv_beta.0 && p.inv_beta.0 <= p.inv_beta.1 && p.inv_beta.2 >= 1,
            || "phase.inv_beta must be [lo, hi, points] with lo > 0".into(),
        )?;
        check(p.refine_tol > 0.0 && p.r >= 0.0, || "phase: need refine_tol > 0 and r >= 0".into())?;
        if let Some(m) = self.count.markets {
            check(m >= 2, || "count.markets must be at least 2".into())?;
        }
        if let Some(c) = self.count.classes {
            check(c >= 1, || "count.classes must be at least 1".into())?;
        }
        Ok(())
    }

    pub fn market_specs(&self) -> Result<Vec<MarketSpec>> {
        MarketSpec::list(&self.markets).map_err(config_error)
    }

    /// Multi-agent configuration; the run seed is used unchanged.
    pub fn simulation(&self) -> Result<SimulationConfig> {
        let classes = self
            .classes
            .iter()
            .map(|c| {
                Ok(ClassPopulation {
                    spec: c.spec()?,
                    count: c.count,
                })
            })
            .collect::<Result<_>>()?;
        Ok(SimulationConfig {
            markets: self.market_specs()?,
            classes,
            order_dist: self.orders,
            max_rounds: self.simulate.max_rounds,
            seed: self.seed,
            window: self.simulate.window,
            tolerance: self.simulate.tolerance,
            bins: self.simulate.bins,
        })
    }

    /// Large-population description; needs exactly three markets. Class
    /// weights are the head counts.
    pub fn system(&self) -> Result<MarketSystem> {
        check(self.markets.len() == 3, || {
            format!("this command needs exactly 3 markets, got {}", self.markets.len())
        })?;
        MarketSystem::new(
            self.market_specs()?,
            self.classes.iter().map(|c| c.spec()).collect::<Result<_>>()?,
            self.classes.iter().map(|c| c.count as f64).collect(),
            self.orders,
        )
        .map_err(config_error)
    }

    pub fn phase_options(&self) -> PhaseOptions {
        PhaseOptions {
            roots: self.roots.options(),
            action: self.action.options(),
            r: self.phase.r,
            mixture: self.phase.mixture,
            ..PhaseOptions::default()
        }
    }

    pub fn sweep(&self) -> (SweepBase, SweepOptions) {
        let base = SweepBase {
            p_buy: self.classes.iter().map(|c| c.p_buy).collect(),
            r: self.classes[0].r,
            dist: self.orders,
        };
        let opts = SweepOptions {
            bias: self.phase.bias,
            inv_beta: self.phase.inv_beta,
            refine_tol: self.phase.refine_tol,
            phase: self.phase_options(),
        };
        (base, opts)
    }
}

/// Reads and validates a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    RunConfig::from_toml(&text)
}
