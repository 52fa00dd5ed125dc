//! Single-period clearing-house double auction.
//!
//! All orders of a period arrive together. The market sets one uniform price
//! between the mean ask and the mean bid, discards orders that cannot execute
//! at that price and pairs the remaining buyers and sellers uniformly at
//! random. Every order is for a single unit.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type AgentId = usize;

/// Gaussian distributions the zero-intelligence bids and asks are drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderDistribution {
    pub mu_ask: f64,
    pub mu_bid: f64,
    pub sigma_ask: f64,
    pub sigma_bid: f64,
}

impl Default for OrderDistribution {
    /// Unit spread between mean bid and mean ask, unit standard deviations.
    fn default() -> Self {
        Self {
            mu_ask: 0.0,
            mu_bid: 1.0,
            sigma_ask: 1.0,
            sigma_bid: 1.0,
        }
    }
}

impl OrderDistribution {
    pub fn new(mu_ask: f64, mu_bid: f64, sigma_ask: f64, sigma_bid: f64) -> Result<Self> {
        let d = Self {
            mu_ask,
            mu_bid,
            sigma_ask,
            sigma_bid,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu_ask.is_finite() && self.mu_bid.is_finite()) {
            return Err(invalid("order means must be finite"));
        }
        if self.mu_bid <= self.mu_ask {
            return Err(invalid(format!(
                "mean bid {} must exceed mean ask {}",
                self.mu_bid, self.mu_ask
            )));
        }
        if !(self.sigma_ask > 0.0 && self.sigma_bid > 0.0)
            || !self.sigma_ask.is_finite()
            || !self.sigma_bid.is_finite()
        {
            return Err(invalid("order standard deviations must be positive"));
        }
        Ok(())
    }

    /// Deterministic price of a market in an infinitely large population.
    pub fn large_population_price(&self, market: &MarketSpec) -> f64 {
        self.mu_ask + market.theta * (self.mu_bid - self.mu_ask)
    }

    pub fn bid_sampler(&self) -> Normal<f64> {
        Normal::new(self.mu_bid, self.sigma_bid).expect("validated sigma")
    }

    pub fn ask_sampler(&self) -> Normal<f64> {
        Normal::new(self.mu_ask, self.sigma_ask).expect("validated sigma")
    }

    pub fn sample_bid<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.bid_sampler().sample(rng)
    }

    pub fn sample_ask<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.ask_sampler().sample(rng)
    }
}

/// A market is characterised by its bias `theta` between mean ask (0) and
/// mean bid (1). `theta = 0.5` is a fair market.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MarketSpec {
    pub theta: f64,
}

impl MarketSpec {
    pub fn new(theta: f64) -> Result<Self> {
        let m = Self { theta };
        m.validate()?;
        Ok(m)
    }

    pub fn fair() -> Self {
        Self { theta: 0.5 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(invalid(format!("theta out of [0,1]: {}", self.theta)));
        }
        Ok(())
    }

    pub fn is_fair(&self) -> bool {
        self.theta == 0.5
    }

    pub fn list(thetas: &[f64]) -> Result<Vec<Self>> {
        thetas.iter().map(|&t| Self::new(t)).collect()
    }
}

/// Orders submitted to one market in one clearing period.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OrderBook {
    bids: Vec<(AgentId, f64)>,
    asks: Vec<(AgentId, f64)>,
}

impl OrderBook {
    /// Builds a book, rejecting agents that appear more than once.
    pub fn new(bids: Vec<(AgentId, f64)>, asks: Vec<(AgentId, f64)>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(bids.len() + asks.len());
        for &(id, price) in bids.iter().chain(asks.iter()) {
            if !seen.insert(id) {
                return Err(invalid(format!("agent {id} submitted more than one order")));
            }
            if !price.is_finite() {
                return Err(invalid(format!("agent {id} submitted a non-finite price")));
            }
        }
        Ok(Self { bids, asks })
    }

    /// Callers guarantee that every agent appears at most once.
    pub(crate) fn from_parts(bids: Vec<(AgentId, f64)>, asks: Vec<(AgentId, f64)>) -> Self {
        Self { bids, asks }
    }

    pub fn bids(&self) -> &[(AgentId, f64)] {
        &self.bids
    }

    pub fn asks(&self) -> &[(AgentId, f64)] {
        &self.asks
    }

    pub fn participants(&self) -> usize {
        self.bids.len() + self.asks.len()
    }
}

/// Result of clearing one market for one period.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RoundOutcome {
    /// `None` when one side of the book was empty.
    pub price: Option<f64>,
    /// (buyer, seller) pairs that traded.
    pub pairs: Vec<(AgentId, AgentId)>,
    /// Score of every participant; unmatched and invalid orders score 0.
    pub scores: Vec<(AgentId, f64)>,
}

impl RoundOutcome {
    pub fn score_of(&self, agent: AgentId) -> Option<f64> {
        self.scores.iter().find(|(id, _)| *id == agent).map(|&(_, s)| s)
    }

    pub fn trades(&self) -> usize {
        self.pairs.len()
    }
}

fn mean(orders: &[(AgentId, f64)]) -> f64 {
    orders.iter().map(|&(_, p)| p).sum::<f64>() / orders.len() as f64
}

/// Uniform price `<a> + theta (<b> - <a>)` from the submitted orders.
pub fn clearing_price(book: &OrderBook, market: &MarketSpec) -> Result<f64> {
    if book.bids.is_empty() {
        return Err(Error::EmptySide("bids"));
    }
    if book.asks.is_empty() {
        return Err(Error::EmptySide("asks"));
    }
    let mean_ask = mean(&book.asks);
    let mean_bid = mean(&book.bids);
    Ok(mean_ask + market.theta * (mean_bid - mean_ask))
}

/// Splits off the orders executable at `price`: bids at or above, asks at or
/// below. Ties count as valid.
pub fn validate_orders(
    book: &OrderBook,
    price: f64,
) -> (Vec<(AgentId, f64)>, Vec<(AgentId, f64)>) {
    let bids = book.bids.iter().copied().filter(|&(_, b)| b >= price).collect();
    let asks = book.asks.iter().copied().filter(|&(_, a)| a <= price).collect();
    (bids, asks)
}

/// Pairs valid buyers and sellers uniformly at random at `price`.
///
/// The short side trades in full; which members of the long side trade is a
/// uniformly random subset. Matched buyers score `b - price`, matched sellers
/// `price - a`, everyone else in the inputs scores 0.
pub fn match_and_score<R: Rng + ?Sized>(
    mut bids: Vec<(AgentId, f64)>,
    mut asks: Vec<(AgentId, f64)>,
    price: f64,
    rng: &mut R,
) -> RoundOutcome {
    let k = bids.len().min(asks.len());
    bids.shuffle(rng);
    asks.shuffle(rng);
    let mut scores = Vec::with_capacity(bids.len() + asks.len());
    let mut pairs = Vec::with_capacity(k);
    for (i, &(buyer, b)) in bids.iter().enumerate() {
        scores.push((buyer, if i < k { b - price } else { 0.0 }));
    }
    for (i, &(seller, a)) in asks.iter().enumerate() {
        scores.push((seller, if i < k { price - a } else { 0.0 }));
    }
    for i in 0..k {
        pairs.push((bids[i].0, asks[i].0));
    }
    RoundOutcome {
        price: Some(price),
        pairs,
        scores,
    }
}

/// Full clearing of one market: price, validation, matching, and zero scores
/// for invalid orders. A book with an empty side produces no trades.
pub fn clear_market<R: Rng + ?Sized>(
    book: &OrderBook,
    market: &MarketSpec,
    rng: &mut R,
) -> RoundOutcome {
    let price = match clearing_price(book, market) {
        Ok(p) => p,
        Err(_) => {
            return RoundOutcome {
                price: None,
                pairs: Vec::new(),
                scores: book
                    .bids
                    .iter()
                    .chain(book.asks.iter())
                    .map(|&(id, _)| (id, 0.0))
                    .collect(),
            }
        }
    };
    let mut outcome = {
        let (bids, asks) = validate_orders(book, price);
        match_and_score(bids, asks, price, rng)
    };
    outcome.scores.extend(
        book.bids
            .iter()
            .filter(|&&(_, b)| b < price)
            .chain(book.asks.iter().filter(|&&(_, a)| a > price))
            .map(|&(id, _)| (id, 0.0)),
    );
    outcome
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn book(bids: &[f64], asks: &[f64]) -> OrderBook {
        let n = bids.len();
        OrderBook::new(
            bids.iter().copied().enumerate().collect(),
            asks.iter().enumerate().map(|(i, &a)| (n + i, a)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn price_examples() {
        let b = book(&[0.9, 1.1], &[0.4, 0.6]);
        let p = |t| clearing_price(&b, &MarketSpec::new(t).unwrap()).unwrap();
        assert!((p(0.5) - 0.75).abs() < 1e-15);
        assert!((p(0.0) - 0.5).abs() < 1e-15);
        assert!((p(1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empty_side_has_no_price() {
        let b = book(&[0.9], &[]);
        assert!(matches!(
            clearing_price(&b, &MarketSpec::fair()),
            Err(Error::EmptySide("asks"))
        ));
        let out = clear_market(&b, &MarketSpec::fair(), &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(out.price, None);
        assert_eq!(out.scores, vec![(0, 0.0)]);
    }

    #[test]
    fn validation_examples() {
        let b = book(&[0.7, 0.8], &[0.5, 0.9]);
        let (vb, va) = validate_orders(&b, 0.75);
        assert_eq!(vb, vec![(1, 0.8)]);
        assert_eq!(va, vec![(2, 0.5)]);
        let tie = book(&[0.75], &[0.75]);
        let (vb, va) = validate_orders(&tie, 0.75);
        assert_eq!(vb.len(), 1);
        assert_eq!(va.len(), 1);
    }

    #[test]
    fn duplicate_agents_rejected() {
        assert!(OrderBook::new(vec![(1, 1.0)], vec![(1, 0.5)]).is_err());
    }

    #[test]
    fn theta_out_of_range() {
        let err = MarketSpec::new(1.2).unwrap_err().to_string();
        assert!(err.contains("theta out of [0,1]"), "{err}");
    }

    #[test]
    fn long_side_unmatched_scores_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let out = match_and_score(vec![(0, 0.8), (1, 1.0)], vec![(2, 0.5)], 0.75, &mut rng);
        assert_eq!(out.pairs.len(), 1);
        assert!((out.score_of(2).unwrap() - 0.25).abs() < 1e-15);
        let (buyer, _) = out.pairs[0];
        let other = 1 - buyer;
        let bid = [0.8, 1.0][buyer];
        assert!((out.score_of(buyer).unwrap() - (bid - 0.75)).abs() < 1e-15);
        assert_eq!(out.score_of(other), Some(0.0));
    }

    #[test]
    fn balanced_sides_all_trade() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let bids: Vec<_> = (0..5).map(|i| (i, 1.0 + i as f64 * 0.1)).collect();
        let asks: Vec<_> = (5..10).map(|i| (i, 0.1 * (i - 5) as f64)).collect();
        let out = match_and_score(bids, asks, 0.9, &mut rng);
        assert_eq!(out.pairs.len(), 5);
        assert!(out.scores.iter().all(|&(_, s)| s > 0.0));
    }

    #[test]
    fn matched_buyer_is_uniform() {
        // Two valid buyers competing for one seller: each trades with
        // probability 1/2. 10^4 seeded repetitions, 3 sigma binomial band.
        let reps = 10_000;
        let mut first = 0usize;
        for rep in 0..reps {
            let mut rng = ChaCha8Rng::seed_from_u64(rep as u64);
            let out = match_and_score(vec![(0, 0.8), (1, 1.0)], vec![(2, 0.5)], 0.75, &mut rng);
            if out.pairs[0].0 == 0 {
                first += 1;
            }
        }
        let p = first as f64 / reps as f64;
        let sd = (0.25 / reps as f64).sqrt();
        assert!((p - 0.5).abs() < 3.0 * sd, "p = {p}");
    }

    fn orders() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (
            prop::collection::vec(-3.0f64..4.0, 1..40),
            prop::collection::vec(-3.0f64..4.0, 1..40),
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn outcome_invariants((bids, asks) in orders(), theta in 0.0f64..=1.0, seed in any::<u64>()) {
            let b = book(&bids, &asks);
            let market = MarketSpec::new(theta).unwrap();
            let out = clear_market(&b, &market, &mut ChaCha8Rng::seed_from_u64(seed));
            let price = out.price.unwrap();
            prop_assert_eq!(out.scores.len(), b.participants());
            let n = bids.len();
            for &(buyer, seller) in &out.pairs {
                prop_assert!(buyer < n && seller >= n);
                prop_assert!(bids[buyer] >= price);
                prop_assert!(asks[seller - n] <= price);
                prop_assert!((out.score_of(buyer).unwrap() - (bids[buyer] - price)).abs() < 1e-12);
                prop_assert!((out.score_of(seller).unwrap() - (price - asks[seller - n])).abs() < 1e-12);
            }
            let mut traded: HashSet<AgentId> = HashSet::new();
            for &(bu, se) in &out.pairs {
                prop_assert!(traded.insert(bu));
                prop_assert!(traded.insert(se));
            }
            for &(id, s) in &out.scores {
                prop_assert!(s >= 0.0);
                if !traded.contains(&id) {
                    prop_assert_eq!(s, 0.0);
                }
            }
            let (vb, va) = validate_orders(&b, price);
            prop_assert_eq!(out.pairs.len(), vb.len().min(va.len()));
        }

        #[test]
        fn price_is_affine_in_theta((bids, asks) in orders(), theta in 0.0f64..=1.0) {
            let b = book(&bids, &asks);
            let p0 = clearing_price(&b, &MarketSpec::new(0.0).unwrap()).unwrap();
            let p1 = clearing_price(&b, &MarketSpec::new(1.0).unwrap()).unwrap();
            let p = clearing_price(&b, &MarketSpec::new(theta).unwrap()).unwrap();
            prop_assert!((p - (p0 + theta * (p1 - p0))).abs() < 1e-12);
        }

        #[test]
        fn permutation_leaves_price_and_valid_sets(
            (bids, asks) in orders(), theta in 0.0f64..=1.0, seed in any::<u64>()
        ) {
            let market = MarketSpec::new(theta).unwrap();
            let b = book(&bids, &asks);
            let mut pb: Vec<_> = b.bids().to_vec();
            let mut pa: Vec<_> = b.asks().to_vec();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            pb.shuffle(&mut rng);
            pa.shuffle(&mut rng);
            let permuted = OrderBook::new(pb, pa).unwrap();
            let p = clearing_price(&b, &market).unwrap();
            let q = clearing_price(&permuted, &market).unwrap();
            prop_assert!((p - q).abs() < 1e-12);
            let (mut vb, mut va) = validate_orders(&b, p);
            let (mut wb, mut wa) = validate_orders(&permuted, p);
            vb.sort_by_key(|o| o.0); wb.sort_by_key(|o| o.0);
            va.sort_by_key(|o| o.0); wa.sort_by_key(|o| o.0);
            prop_assert_eq!(vb, wb);
            prop_assert_eq!(va, wa);
        }
    }
}
