//! Traders with zero-intelligence order placement learning where to trade
//! among several clearing-house double auctions.
//!
//! The crate is split along the analysis pipeline:
//!
//! * [`auction`] clears a single market for one trading period.
//! * [`learning`] holds the per-agent attraction update and logit choice.
//! * [`simulate`] runs the full multi-agent model and summarises the
//!   population by attraction-difference histograms and peaks.
//! * [`theory`] evaluates payoff moments, drift and noise covariance of the
//!   large-population Fokker-Planck description and the homogeneous
//!   population dynamics.
//! * [`bifurcation`] locates and classifies zeros of the drift and scans the
//!   intensity of choice for transitions.
//! * [`fw`] minimises the Onsager-Machlup action between fixed points and
//!   turns action differences into peak-weight classes.
//! * [`phases`] assembles triangle codes, phase-diagram sweeps and the
//!   loyalty-group counting argument.
//! * [`io`] covers configuration files, CSV tables and SVG figures.

pub mod auction;
pub mod bifurcation;
pub mod error;
pub mod fw;
pub mod io;
pub mod learning;
pub mod linalg;
pub mod optimize;
pub mod phases;
pub mod rng;
pub mod simulate;
pub mod theory;

pub use auction::{MarketSpec, OrderBook, OrderDistribution, RoundOutcome};
pub use bifurcation::{FixedPoint, Stability, ThresholdReport};
pub use error::{Error, Result};
pub use fw::{ActionResult, Path, PeakClassification};
pub use learning::{AttractionState, Role, TraderClassSpec};
pub use phases::{FragmentationPattern, TriangleCode};
pub use simulate::{Aggregates, AttractionHistogram, PeakSet, SimulationConfig};
pub use theory::{DriftField, LangevinField, PayoffMoments};
