//! Multi-agent engine: every round each agent picks a market by logit
//! choice, a role and an order; the markets clear independently and every
//! agent updates its attractions with the realised score.
//!
//! Randomness is drawn from counter-based streams keyed by (seed, round,
//! chunk) for the agent phase and (seed, round, market) for clearing, so a
//! run is bit-identical for any number of worker threads.

mod histogram;

pub use histogram::{
    detect_peaks, detect_peaks_with, zone_of, AttractionHistogram, Peak, PeakSet, NOISE_FLOOR,
    PEAK_THRESHOLD,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::auction::{clear_market, MarketSpec, OrderBook, OrderDistribution, RoundOutcome};
use crate::error::{invalid, Result};
use crate::learning::{logit_into, sample_index, update_in_place, TraderClassSpec};
use crate::rng::{stream, Purpose};

/// Agents handled by one random stream. Fixed so results do not depend on
/// the thread pool.
const CHUNK: usize = 1024;

/// One class of identical traders and its head count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassPopulation {
    #[serde(flatten)]
    pub spec: TraderClassSpec,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub markets: Vec<MarketSpec>,
    pub classes: Vec<ClassPopulation>,
    pub order_dist: OrderDistribution,
    pub max_rounds: u64,
    pub seed: u64,
    /// Rounds per steady-state window; `None` means `ceil(10 / r)`.
    pub window: Option<u64>,
    /// Steady-state threshold on the L1 change of zone masses between
    /// consecutive windows.
    pub tolerance: f64,
    /// Histogram bins per axis.
    pub bins: usize,
}

impl SimulationConfig {
    pub fn new(
        markets: Vec<MarketSpec>,
        classes: Vec<ClassPopulation>,
        order_dist: OrderDistribution,
        seed: u64,
    ) -> Result<Self> {
        let c = Self {
            markets,
            classes,
            order_dist,
            max_rounds: 50_000,
            seed,
            window: None,
            tolerance: 0.01,
            bins: 200,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.markets.len() < 2 {
            return Err(invalid(format!("need at least 2 markets, got {}", self.markets.len())));
        }
        if self.markets.len() > u8::MAX as usize {
            return Err(invalid("too many markets"));
        }
        for m in &self.markets {
            m.validate()?;
        }
        if self.classes.is_empty() {
            return Err(invalid("need at least one trader class"));
        }
        for c in &self.classes {
            c.spec.validate()?;
            if c.count == 0 {
                return Err(invalid("class counts must be positive"));
            }
        }
        if self.agents() < 2 {
            return Err(invalid("need at least 2 agents"));
        }
        self.order_dist.validate()?;
        if !(self.tolerance > 0.0) {
            return Err(invalid("steady-state tolerance must be positive"));
        }
        if self.window == Some(0) {
            return Err(invalid("steady-state window must be positive"));
        }
        if self.bins == 0 {
            return Err(invalid("histogram needs at least one bin"));
        }
        Ok(())
    }

    pub fn agents(&self) -> usize {
        self.classes.iter().map(|c| c.count).sum()
    }

    /// Rescaled time per round: the learning rate of the first class.
    pub fn time_step(&self) -> f64 {
        self.classes[0].spec.r
    }

    pub fn window(&self) -> u64 {
        self.window.unwrap_or_else(|| {
            let r = self.classes.iter().map(|c| c.spec.r).fold(f64::INFINITY, f64::min);
            (10.0 / r).ceil() as u64
        })
    }

    /// Half-width of the histogram grid: the largest score reachable by an
    /// order at its 99.9th percentile, over all markets.
    pub fn score_range(&self) -> f64 {
        const Z999: f64 = 3.090_232_306_167_813;
        let d = &self.order_dist;
        self.markets
            .iter()
            .map(|m| {
                let p = d.large_population_price(m);
                (d.mu_bid + Z999 * d.sigma_bid - p).max(p - d.mu_ask + Z999 * d.sigma_ask)
            })
            .fold(0.0, f64::max)
    }
}

/// Market aggregates of one round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    /// Buyer-to-seller ratio per market, `None` where no seller showed up.
    pub f: Vec<Option<f64>>,
    pub round: u64,
    /// Rescaled time `round * r`.
    pub t: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundReport {
    pub outcomes: Vec<RoundOutcome>,
    pub aggregates: Aggregates,
    /// Fraction of all agents at each market.
    pub shares: Vec<f64>,
}

/// Attractions of every agent, stored densely agent-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Population {
    markets: usize,
    attractions: Vec<f64>,
    class_of: Vec<usize>,
}

impl Population {
    pub fn zeros(config: &SimulationConfig) -> Self {
        let m = config.markets.len();
        let class_of = config
            .classes
            .iter()
            .enumerate()
            .flat_map(|(c, cp)| std::iter::repeat(c).take(cp.count))
            .collect::<Vec<_>>();
        Self {
            markets: m,
            attractions: vec![0.0; class_of.len() * m],
            class_of,
        }
    }

    pub fn len(&self) -> usize {
        self.class_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class_of.is_empty()
    }

    pub fn markets(&self) -> usize {
        self.markets
    }

    pub fn class_of(&self, agent: usize) -> usize {
        self.class_of[agent]
    }

    pub fn attractions(&self, agent: usize) -> &[f64] {
        &self.attractions[agent * self.markets..(agent + 1) * self.markets]
    }

    pub fn set_attractions(&mut self, agent: usize, a: &[f64]) {
        self.attractions[agent * self.markets..(agent + 1) * self.markets].copy_from_slice(a);
    }

    /// `(A1 - A2, A1 - A3)` of an agent; missing markets count as 0.
    pub fn differences(&self, agent: usize) -> [f64; 2] {
        let a = self.attractions(agent);
        let d = |m: usize| if m < a.len() { a[0] - a[m] } else { 0.0 };
        [d(1), d(2)]
    }

    /// Agents belonging to `class`.
    pub fn members(&self, class: usize) -> impl Iterator<Item = usize> + '_ {
        self.class_of
            .iter()
            .enumerate()
            .filter(move |(_, c)| **c == class)
            .map(|(i, _)| i)
    }
}

/// Histogram of one class's current attraction differences.
pub fn attraction_histogram(
    population: &Population,
    class_id: usize,
    bins: usize,
    range: f64,
) -> AttractionHistogram {
    let mut h = AttractionHistogram::new(class_id, bins, range);
    for i in population.members(class_id) {
        h.add(population.differences(i), 1.0);
    }
    h
}

#[derive(Clone, Copy, Debug, Default)]
struct Choice {
    market: u8,
    buyer: bool,
    price: f64,
}

/// Runs rounds of the model on a population.
#[derive(Clone, Debug)]
pub struct Simulation {
    config: SimulationConfig,
    population: Population,
    round: u64,
    choices: Vec<Choice>,
    scores: Vec<f64>,
}

impl Simulation {
    pub fn new(config: SimulationConfig) -> Result<Self> {
        config.validate()?;
        let population = Population::zeros(&config);
        Ok(Self::with_population(config, population))
    }

    pub fn with_population(config: SimulationConfig, population: Population) -> Self {
        let n = population.len();
        Self {
            config,
            population,
            round: 0,
            choices: vec![Choice::default(); n],
            scores: vec![0.0; n],
        }
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.config
    }

    pub fn population(&self) -> &Population {
        &self.population
    }

    pub fn population_mut(&mut self) -> &mut Population {
        &mut self.population
    }

    /// Rounds completed so far.
    pub fn round(&self) -> u64 {
        self.round
    }

    /// Plays one round: choice, role, order, clearing, learning.
    pub fn step(&mut self) -> RoundReport {
        let cfg = &self.config;
        let m = cfg.markets.len();
        let round = self.round;
        let seed = cfg.seed;
        let pop = &self.population;

        self.choices
            .par_chunks_mut(CHUNK)
            .zip(pop.attractions.par_chunks(CHUNK * m))
            .zip(pop.class_of.par_chunks(CHUNK))
            .enumerate()
            .for_each(|(chunk, ((choices, attractions), classes))| {
                let mut rng = stream(seed, Purpose::Agents, round, chunk as u64);
                let mut probs = vec![0.0; m];
                let bids = cfg.order_dist.bid_sampler();
                let asks = cfg.order_dist.ask_sampler();
                for ((choice, a), &c) in choices.iter_mut().zip(attractions.chunks(m)).zip(classes) {
                    let spec = &cfg.classes[c].spec;
                    logit_into(a, spec.beta, &mut probs);
                    let market = sample_index(&probs, &mut rng);
                    let buyer = rand::Rng::gen::<f64>(&mut rng) < spec.p_buy;
                    let price = if buyer {
                        rand_distr::Distribution::sample(&bids, &mut rng)
                    } else {
                        rand_distr::Distribution::sample(&asks, &mut rng)
                    };
                    *choice = Choice {
                        market: market as u8,
                        buyer,
                        price,
                    };
                }
            });

        let mut books: Vec<(Vec<(usize, f64)>, Vec<(usize, f64)>)> = vec![Default::default(); m];
        for (id, ch) in self.choices.iter().enumerate() {
            let book = &mut books[ch.market as usize];
            if ch.buyer {
                book.0.push((id, ch.price));
            } else {
                book.1.push((id, ch.price));
            }
        }
        let n = pop.len() as f64;
        let counts: Vec<(usize, usize)> = books.iter().map(|(b, a)| (b.len(), a.len())).collect();
        let outcomes: Vec<RoundOutcome> = books
            .into_par_iter()
            .enumerate()
            .map(|(mk, (bids, asks))| {
                let book = OrderBook::from_parts(bids, asks);
                let mut rng = stream(seed, Purpose::Markets, round, mk as u64);
                clear_market(&book, &cfg.markets[mk], &mut rng)
            })
            .collect();

        self.scores.iter_mut().for_each(|s| *s = 0.0);
        for o in &outcomes {
            for &(id, s) in &o.scores {
                self.scores[id] = s;
            }
        }
        let choices = &self.choices;
        let scores = &self.scores;
        let classes = &self.population.class_of;
        self.population
            .attractions
            .par_chunks_mut(m)
            .enumerate()
            .for_each(|(i, a)| {
                let r = cfg.classes[classes[i]].spec.r;
                update_in_place(a, choices[i].market as usize, scores[i], r);
            });

        self.round += 1;
        let f = counts
            .iter()
            .map(|&(b, s)| if s > 0 { Some(b as f64 / s as f64) } else { None })
            .collect();
        let shares = counts.iter().map(|&(b, s)| (b + s) as f64 / n).collect();
        RoundReport {
            outcomes,
            aggregates: Aggregates {
                f,
                round: self.round,
                t: self.round as f64 * cfg.time_step(),
            },
            shares,
        }
    }
}

/// One row of the aggregate time series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesRecord {
    pub aggregates: Aggregates,
    pub shares: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct SteadyState {
    /// Time-averaged histograms over the last complete window, one per class.
    pub histograms: Vec<AttractionHistogram>,
    pub peaks: Vec<PeakSet>,
    pub series: Vec<SeriesRecord>,
    /// False when `max_rounds` was reached before the window criterion.
    pub converged: bool,
    pub rounds: u64,
    pub population: Population,
}

/// Runs rounds until the per-class mass in each preference zone, averaged
/// over a window, changes by less than the tolerance (L1) between two
/// consecutive windows, or until `max_rounds`.
pub fn run_to_steady_state(config: SimulationConfig) -> Result<SteadyState> {
    let window = config.window();
    let range = config.score_range();
    let bins = config.bins;
    let n_classes = config.classes.len();
    let tol = config.tolerance;
    let max_rounds = config.max_rounds;
    let mut sim = Simulation::new(config)?;
    let fresh = || -> Vec<AttractionHistogram> {
        (0..n_classes).map(|c| AttractionHistogram::new(c, bins, range)).collect()
    };
    let mut current = fresh();
    let mut previous: Option<Vec<AttractionHistogram>> = None;
    let mut series = Vec::new();
    let mut in_window = 0;
    let mut converged = false;

    while sim.round() < max_rounds {
        let report = sim.step();
        series.push(SeriesRecord {
            aggregates: report.aggregates,
            shares: report.shares,
        });
        let pop = sim.population();
        for i in 0..pop.len() {
            current[pop.class_of(i)].add(pop.differences(i), 1.0);
        }
        in_window += 1;
        if in_window == window {
            let done = previous.as_ref().is_some_and(|prev| {
                prev.iter().zip(&current).all(|(a, b)| zone_change(a, b) < tol)
            });
            previous = Some(std::mem::replace(&mut current, fresh()));
            in_window = 0;
            if done {
                converged = true;
                break;
            }
        }
    }
    let histograms = previous.unwrap_or(current);
    let peaks = histograms.iter().map(detect_peaks).collect();
    Ok(SteadyState {
        histograms,
        peaks,
        series,
        converged,
        rounds: sim.round(),
        population: sim.population,
    })
}

fn zone_change(a: &AttractionHistogram, b: &AttractionHistogram) -> f64 {
    let (ta, tb) = (a.total(), b.total());
    let (za, zb) = (a.zone_masses(), b.zone_masses());
    let out = (a.out_of_range / ta - b.out_of_range / tb).abs();
    za.iter().zip(&zb).map(|(x, y)| (x / ta - y / tb).abs()).sum::<f64>() + out
}

/// Runs a fixed number of rounds and returns the aggregate series.
pub fn run_series(config: SimulationConfig, rounds: u64) -> Result<Vec<SeriesRecord>> {
    let mut sim = Simulation::new(config)?;
    Ok((0..rounds)
        .map(|_| {
            let r = sim.step();
            SeriesRecord {
                aggregates: r.aggregates,
                shares: r.shares,
            }
        })
        .collect())
}
