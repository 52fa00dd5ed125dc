//! Per-agent adaptation: exponential attraction updates, multinomial logit
//! market choice and buyer/seller role sampling.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Buyer,
    Seller,
}

/// Learning and trading parameters shared by all agents of one class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraderClassSpec {
    /// Probability of acting as a buyer in any given round.
    pub p_buy: f64,
    /// Intensity of choice.
    pub beta: f64,
    /// Inverse memory length.
    pub r: f64,
}

impl TraderClassSpec {
    pub fn new(p_buy: f64, beta: f64, r: f64) -> Result<Self> {
        let s = Self { p_buy, beta, r };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_buy) {
            return Err(invalid(format!("p_buy out of [0,1]: {}", self.p_buy)));
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(invalid(format!("beta must be finite and >= 0: {}", self.beta)));
        }
        if !(self.r > 0.0 && self.r <= 1.0) {
            return Err(invalid(format!("r out of (0,1]: {}", self.r)));
        }
        Ok(())
    }

    pub fn with_beta(self, beta: f64) -> Self {
        Self { beta, ..self }
    }
}

/// Attractions of one agent towards each market.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttractionState(pub Vec<f64>);

impl AttractionState {
    pub fn zeros(markets: usize) -> Self {
        Self(vec![0.0; markets])
    }

    pub fn markets(&self) -> usize {
        self.0.len()
    }

    /// `A_1 - A_m` for m = 2..M.
    pub fn differences(&self) -> Vec<f64> {
        attraction_differences(&self.0)
    }

    /// Exponential moving-average update after trading at `chosen` with
    /// realised `score`; every other market decays by `1 - r`.
    pub fn update(&mut self, chosen: usize, score: f64, r: f64) -> Result<()> {
        if chosen >= self.0.len() {
            return Err(Error::MarketIndex {
                index: chosen,
                markets: self.0.len(),
            });
        }
        if !(r > 0.0 && r <= 1.0) {
            return Err(invalid(format!("r out of (0,1]: {r}")));
        }
        update_in_place(&mut self.0, chosen, score, r);
        Ok(())
    }
}

/// Functional form of [`AttractionState::update`].
pub fn update_attractions(
    state: &AttractionState,
    chosen: usize,
    score: f64,
    r: f64,
) -> Result<AttractionState> {
    let mut next = state.clone();
    next.update(chosen, score, r)?;
    Ok(next)
}

#[inline]
pub(crate) fn update_in_place(attractions: &mut [f64], chosen: usize, score: f64, r: f64) {
    let keep = 1.0 - r;
    for a in attractions.iter_mut() {
        *a *= keep;
    }
    attractions[chosen] += r * score;
}

pub fn attraction_differences(attractions: &[f64]) -> Vec<f64> {
    attractions[1..].iter().map(|a| attractions[0] - a).collect()
}

/// Multinomial logit `exp(beta A_m) / sum exp(beta A_m')`, evaluated with the
/// maximum subtracted so large attractions cannot overflow.
pub fn choice_probabilities(state: &AttractionState, beta: f64) -> Vec<f64> {
    let mut out = vec![0.0; state.0.len()];
    logit_into(&state.0, beta, &mut out);
    out
}

#[inline]
pub(crate) fn logit_into(attractions: &[f64], beta: f64, out: &mut [f64]) {
    let max = attractions
        .iter()
        .fold(f64::NEG_INFINITY, |m, &a| m.max(beta * a));
    let mut total = 0.0;
    for (o, &a) in out.iter_mut().zip(attractions) {
        *o = (beta * a - max).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

/// Draws an index from a probability vector.
#[inline]
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // u landed in the rounding gap above the cumulative sum
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

pub fn sample_role<R: Rng + ?Sized>(spec: &TraderClassSpec, rng: &mut R) -> Role {
    if rng.gen::<f64>() < spec.p_buy {
        Role::Buyer
    } else {
        Role::Seller
    }
}
