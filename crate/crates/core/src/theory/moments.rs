//! Mean and mean-square per-round payoff of a trader at a market whose
//! buyer-to-seller ratio is `f`.
//!
//! In a large population the price settles at `mu_a + theta (mu_b - mu_a)`.
//! A valid order is one on the executable side of that price; the side with
//! fewer valid orders trades in full and the longer side trades with
//! probability (short count)/(long count). The payoff of a trader who did not
//! trade is 0, so both moments include the no-trade mass.

use serde::{Deserialize, Serialize};

use super::normal::{cdf, pdf, PositivePart};
use crate::auction::{MarketSpec, OrderDistribution};
use crate::error::{invalid, Error, Result};
use crate::learning::TraderClassSpec;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PayoffMoments {
    pub mean: f64,
    pub mean_sq: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoleMoments {
    pub buyer: PayoffMoments,
    pub seller: PayoffMoments,
}

impl RoleMoments {
    /// Moments for a trader who buys with probability `p_buy`.
    pub fn mix(&self, p_buy: f64) -> PayoffMoments {
        PayoffMoments {
            mean: p_buy * self.buyer.mean + (1.0 - p_buy) * self.seller.mean,
            mean_sq: p_buy * self.buyer.mean_sq + (1.0 - p_buy) * self.seller.mean_sq,
        }
    }
}

fn order_surplus(market: &MarketSpec, dist: &OrderDistribution) -> (f64, PositivePart, PositivePart) {
    let price = dist.large_population_price(market);
    let bid = PositivePart::new((dist.mu_bid - price) / dist.sigma_bid, dist.sigma_bid);
    let ask = PositivePart::new((price - dist.mu_ask) / dist.sigma_ask, dist.sigma_ask);
    (price, bid, ask)
}

/// Large-population buyer and seller moments at ratio `f`.
pub fn role_moments(market: &MarketSpec, f: f64, dist: &OrderDistribution) -> Result<RoleMoments> {
    if !(f > 0.0) || !f.is_finite() {
        return Err(Error::NonPositiveRatio(f));
    }
    let (_, bid, ask) = order_surplus(market, dist);
    // valid bids and asks per seller present
    let valid_bids = f * bid.prob;
    let valid_asks = ask.prob;
    let (buyer_trade, seller_trade) = if valid_bids <= 0.0 {
        (1.0, 0.0)
    } else if valid_asks <= 0.0 {
        (0.0, 1.0)
    } else {
        ((valid_asks / valid_bids).min(1.0), (valid_bids / valid_asks).min(1.0))
    };
    Ok(RoleMoments {
        buyer: PayoffMoments {
            mean: buyer_trade * bid.mean,
            mean_sq: buyer_trade * bid.mean_sq,
        },
        seller: PayoffMoments {
            mean: seller_trade * ask.mean,
            mean_sq: seller_trade * ask.mean_sq,
        },
    })
}

/// Large-population moments for a trader of `class` at `market`.
pub fn payoff_moments(
    class: &TraderClassSpec,
    market: &MarketSpec,
    f: f64,
    dist: &OrderDistribution,
) -> Result<PayoffMoments> {
    Ok(role_moments(market, f, dist)?.mix(class.p_buy))
}

/// Moments `E[((Y + d)^+)^3]` and `E[((Y + d)^+)^4]` of a standard normal `Y`.
fn higher_positive_moments(d: f64) -> (f64, f64) {
    let q = cdf(d);
    let phi = pdf(d);
    let m3 = (d * d + 2.0) * phi + 3.0 * d * q + d * d * d * q;
    let m4 = phi * (d * d * d + 5.0 * d) + q * (d.powi(4) + 6.0 * d * d + 3.0);
    (m3, m4)
}

/// Per-agent second-moment structure of (valid indicator, surplus, squared
/// surplus, standardised order shock) for one side of the book.
struct SideStats {
    mean: [f64; 4],
    cov: [[f64; 4]; 4],
    part: PositivePart,
}

impl SideStats {
    fn new(d: f64, s: f64) -> Self {
        let p = PositivePart::new(d, s);
        let (m3, m4) = higher_positive_moments(d);
        let second = [
            [p.prob, p.mean, p.mean_sq, p.prob_times_shock],
            [p.mean, p.mean_sq, s.powi(3) * m3, p.mean_times_shock],
            [p.mean_sq, s.powi(3) * m3, s.powi(4) * m4, p.mean_sq_times_shock],
            [p.prob_times_shock, p.mean_times_shock, p.mean_sq_times_shock, 1.0],
        ];
        let mean = [p.prob, p.mean, p.mean_sq, 0.0];
        let mut cov = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                cov[i][j] = second[i][j] - mean[i] * mean[j];
            }
        }
        Self { mean, cov, part: p }
    }
}

/// A book-level total written as a sum of per-agent terms: coefficients on
/// (indicator, surplus, squared surplus, order shock) for buyers and sellers.
#[derive(Clone, Copy)]
struct Linear {
    buyer: [f64; 4],
    seller: [f64; 4],
}

impl Linear {
    fn combine(self, other: Linear, a: f64, b: f64) -> Linear {
        let mut out = self;
        for i in 0..4 {
            out.buyer[i] = a * self.buyer[i] + b * other.buyer[i];
            out.seller[i] = a * self.seller[i] + b * other.seller[i];
        }
        out
    }
}

/// Moments of a market with `n_buyers` and `n_sellers` present, including
/// the leading finite-population effects around the rationing threshold.
///
/// The realised price, the valid-order counts and the surplus totals are
/// linearised in the per-order shocks. The imbalance `D = K_own - K_other`
/// between valid counts is then Gaussian, and the payoff lost to rationing
/// is `E[u D^+]` with `u` the mean surplus per valid order. Away from the
/// threshold this reduces to [`role_moments`] at `f = n_buyers / n_sellers`;
/// at the threshold it captures the `O(n^{-1/2})` rationing loss.
pub fn finite_population_role_moments(
    market: &MarketSpec,
    n_buyers: usize,
    n_sellers: usize,
    dist: &OrderDistribution,
) -> Result<RoleMoments> {
    if n_buyers == 0 || n_sellers == 0 {
        return Err(invalid("finite-population moments need at least one buyer and one seller"));
    }
    let (price, _, _) = order_surplus(market, dist);
    let theta = market.theta;
    let nb = n_buyers as f64;
    let ns = n_sellers as f64;
    let bs = SideStats::new((dist.mu_bid - price) / dist.sigma_bid, dist.sigma_bid);
    let ss = SideStats::new((price - dist.mu_ask) / dist.sigma_ask, dist.sigma_ask);

    // price response to one buyer's / seller's standardised shock
    let price_per_buyer_shock = theta * dist.sigma_bid / nb;
    let price_per_seller_shock = -(1.0 - theta) * dist.sigma_ask / ns;
    let stat = |own_b: [f64; 3], own_s: [f64; 3], price_slope: f64| Linear {
        buyer: [own_b[0], own_b[1], own_b[2], price_slope * price_per_buyer_shock],
        seller: [own_s[0], own_s[1], own_s[2], price_slope * price_per_seller_shock],
    };
    let zero = [0.0; 3];
    let valid_bids = stat([1.0, 0.0, 0.0], zero, -nb * bs.part.density);
    let valid_asks = stat(zero, [1.0, 0.0, 0.0], ns * ss.part.density);
    let bid_surplus = stat([0.0, 1.0, 0.0], zero, -nb * bs.part.prob);
    let ask_surplus = stat(zero, [0.0, 1.0, 0.0], ns * ss.part.prob);
    let bid_surplus_sq = stat([0.0, 0.0, 1.0], zero, -2.0 * nb * bs.part.mean);
    let ask_surplus_sq = stat(zero, [0.0, 0.0, 1.0], 2.0 * ns * ss.part.mean);

    let mean = |s: &Linear| -> f64 {
        nb * dot4(&s.buyer, &bs.mean) + ns * dot4(&s.seller, &ss.mean)
    };
    let cov = |a: &Linear, b: &Linear| -> f64 {
        nb * quad4(&a.buyer, &bs.cov, &b.buyer) + ns * quad4(&a.seller, &ss.cov, &b.seller)
    };

    let side = |own: Linear, other: Linear, surplus: Linear, surplus_sq: Linear, n: f64| {
        let imbalance = own.combine(other, 1.0, -1.0);
        let m = mean(&imbalance);
        let sd = cov(&imbalance, &imbalance).max(0.0).sqrt();
        let (excess, p_excess) = if sd > 0.0 {
            let z = m / sd;
            (m * cdf(z) + sd * pdf(z), cdf(z))
        } else if m > 0.0 {
            (m, 1.0)
        } else {
            (0.0, 0.0)
        };
        let valid = mean(&own);
        let moment = |total: Linear| {
            let expected = mean(&total);
            if valid <= 0.0 {
                return 0.0;
            }
            let per_order = expected / valid;
            let per_order_lin = total.combine(own, 1.0 / valid, -per_order / valid);
            let lost = per_order * excess + cov(&per_order_lin, &imbalance) * p_excess;
            ((expected - lost) / n).max(0.0)
        };
        PayoffMoments {
            mean: moment(surplus),
            mean_sq: moment(surplus_sq),
        }
    };

    Ok(RoleMoments {
        buyer: side(valid_bids, valid_asks, bid_surplus, bid_surplus_sq, nb),
        seller: side(valid_asks, valid_bids, ask_surplus, ask_surplus_sq, ns),
    })
}

fn dot4(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn quad4(a: &[f64; 4], m: &[[f64; 4]; 4], b: &[f64; 4]) -> f64 {
    let mut acc = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            acc += a[i] * m[i][j] * b[j];
        }
    }
    acc
}
