//! Perpetual American put on a defaultable stock with constant intensities,
//! and the value of timing its purchase.

use serde::{Deserialize, Serialize};

use crate::defaultable::Side;
use crate::error::{Error, Result};
use crate::num::brent_root;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerpetualParams {
    pub r: f64,
    pub sigma: f64,
    pub strike: f64,
    pub lambda_market: f64,
    pub lambda_buyer: f64,
}

/// One side's perpetual put: exercise below `threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerpetualPut {
    pub r: f64,
    pub sigma: f64,
    pub strike: f64,
    pub lambda: f64,
    pub threshold: f64,
    pub theta: f64,
}

impl PerpetualPut {
    /// `K - s` below the threshold, else
    /// `rK/((r+λ)(θ+1)) (s/b*)^{-θ} + λK/(r+λ)`.
    pub fn value(&self, s: f64) -> f64 {
        if s <= self.threshold {
            return self.strike - s;
        }
        let rl = self.r + self.lambda;
        let power = (-self.theta * (s / self.threshold).ln()).exp();
        self.r * self.strike / (rl * (self.theta + 1.0)) * power + self.lambda * self.strike / rl
    }

    pub fn derivative(&self, s: f64) -> f64 {
        if s <= self.threshold {
            return -1.0;
        }
        let rl = self.r + self.lambda;
        let power = (-self.theta * (s / self.threshold).ln()).exp();
        -self.r * self.strike * self.theta / (rl * (self.theta + 1.0) * s) * power
    }

    /// Value as `s -> ∞`.
    pub fn limit(&self) -> f64 {
        self.lambda * self.strike / (self.r + self.lambda)
    }
}

impl PerpetualParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.r.is_finite()
            && self.r > 0.0
            && self.sigma.is_finite()
            && self.sigma > 0.0
            && self.strike.is_finite()
            && self.strike > 0.0
            && self.lambda_market.is_finite()
            && self.lambda_market >= 0.0
            && self.lambda_buyer.is_finite()
            && self.lambda_buyer >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "invalid perpetual parameters {self:?}"
            )))
        }
    }

    fn lambda(&self, side: Side) -> f64 {
        match side {
            Side::Market => self.lambda_market,
            Side::Buyer => self.lambda_buyer,
        }
    }
}

/// Exercise threshold `b* = 2rK/(2(r+λ)+σ²)` and exponent `θ = 2(r+λ)/σ²`.
pub fn perpetual_put(params: &PerpetualParams, side: Side) -> Result<PerpetualPut> {
    params.validate()?;
    let lambda = params.lambda(side);
    let s2 = params.sigma * params.sigma;
    let rl = params.r + lambda;
    Ok(PerpetualPut {
        r: params.r,
        sigma: params.sigma,
        strike: params.strike,
        lambda,
        threshold: 2.0 * params.r * params.strike / (2.0 * rl + s2),
        theta: 2.0 * rl / s2,
    })
}

/// Purchase threshold `s*` and slope `A` of the timing value below it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PurchaseThreshold {
    pub market: PerpetualPut,
    pub buyer: PerpetualPut,
    pub s_star: f64,
    pub slope: f64,
}

impl PurchaseThreshold {
    /// `B(s) = (r+λ)(b~*/s)^θ~ - (r+λ~)(b*/s)^θ + (λ~ - λ)`.
    pub fn b_function(&self, s: f64) -> f64 {
        b_function(&self.market, &self.buyer, s)
    }

    /// `lim Ĵ(s) = (λ~/(r+λ~) - λ/(r+λ)) K`.
    pub fn limit(&self) -> f64 {
        self.buyer.limit() - self.market.limit()
    }
}

fn b_function(market: &PerpetualPut, buyer: &PerpetualPut, s: f64) -> f64 {
    let r = market.r;
    (r + market.lambda) * (buyer.theta * (buyer.threshold / s).ln()).exp()
        - (r + buyer.lambda) * (market.theta * (market.threshold / s).ln()).exp()
        + (buyer.lambda - market.lambda)
}

/// Root of `B` on `[b*, s_hi]`, `s_hi = 100 K` expanded geometrically until
/// it brackets.
pub fn purchase_threshold(params: &PerpetualParams) -> Result<PurchaseThreshold> {
    params.validate()?;
    if params.lambda_market >= params.lambda_buyer {
        return Err(Error::WrongOrdering {
            lambda_market: params.lambda_market,
            lambda_buyer: params.lambda_buyer,
        });
    }
    let market = perpetual_put(params, Side::Market)?;
    let buyer = perpetual_put(params, Side::Buyer)?;
    let b = |s: f64| b_function(&market, &buyer, s);
    let lo = market.threshold;
    let mut hi = 100.0 * params.strike;
    while b(hi) <= 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::NoBracket { lo, hi });
        }
    }
    let s_star = brent_root(b, lo, hi, 1e-13 * params.strike)?;
    let k = params.strike;
    let (rl, rlb) = (params.r + market.lambda, params.r + buyer.lambda);
    let slope = params.r * k * market.theta / (rl * (market.theta + 1.0) * s_star)
        * (market.theta * (market.threshold / s_star).ln()).exp()
        - params.r * k * buyer.theta / (rlb * (buyer.theta + 1.0) * s_star)
            * (buyer.theta * (buyer.threshold / s_star).ln()).exp();
    Ok(PurchaseThreshold {
        market,
        buyer,
        s_star,
        slope,
    })
}

/// `Ĵ(s)`: `A s` below `s*`, `P~(s) - P(s)` above.
pub fn timing_value(threshold: &PurchaseThreshold, s: f64) -> f64 {
    if s < threshold.s_star {
        threshold.slope * s
    } else {
        threshold.buyer.value(s) - threshold.market.value(s)
    }
}
