use crate::error::{Error, Result};
use crate::lcp::{march, ObstacleProblem, ObstacleSense, RegionSet, SolveStats, Surface};

use super::pricing::{measure_tag, premium_coefficients, pricing_coefficients};
use super::spec::{DefaultableModel, Discretization, Side};

#[derive(Debug, Clone)]
pub struct AmericanPut {
    pub price: Surface,
    /// Nodes where exercise is optimal.
    pub exercise_region: RegionSet,
    /// Exercise level `b*(t)` per time slice: the upper edge of the
    /// exercise region. At maturity it is the strike.
    pub boundary: Vec<Option<f64>>,
    pub stats: SolveStats,
}

/// American put with strike `strike` under the chosen side's intensity.
/// Exercise at default pays the full strike.
pub fn american_exercise(
    model: &DefaultableModel,
    strike: f64,
    side: Side,
    disc: &Discretization,
) -> Result<AmericanPut> {
    model.validate()?;
    disc.check_maturity(model.maturity)?;
    if !(strike.is_finite() && strike > 0.0) {
        return Err(Error::InvalidParameter(format!("strike must be > 0, got {strike}")));
    }
    let payoff: Vec<f64> = disc.grid.s().iter().map(|&s| (strike - s).max(0.0)).collect();
    let obstacle = vec![payoff.clone(); disc.grid.nt()];
    let problem = ObstacleProblem::new(
        disc.grid.clone(),
        pricing_coefficients(model.r, model.sigma, model.intensity(side)),
        payoff,
        move |_| strike,
    )
    .with_obstacle(&obstacle, ObstacleSense::Floor)
    .with_scheme(disc.scheme)
    .with_psor(disc.psor)
    .with_region_tol(disc.region_tol)
    .with_label(match side {
        Side::Market => "P_A",
        Side::Buyer => "P_tilde_A",
    });
    let out = march(&problem)?;
    let nt = disc.grid.nt();
    let boundary = (0..nt)
        .map(|k| {
            if k + 1 == nt {
                Some(strike)
            } else {
                out.region.upper_crossing(k)
            }
        })
        .collect();
    Ok(AmericanPut {
        price: out.surface.with_measure(measure_tag(side)),
        exercise_region: out.region,
        boundary,
        stats: out.stats,
    })
}

#[derive(Debug, Clone)]
pub struct AmericanPurchase {
    /// `P~^A - P^A`, node-wise.
    pub spread: Surface,
    /// Value of the purchase-timing option.
    pub value: Surface,
    /// Delayed purchase premium `J^A - (P~^A - P^A)`.
    pub premium: Surface,
    /// `{J^A = P~^A - P^A}` restricted to a strictly positive spread.
    pub purchase_region: RegionSet,
    /// Purchase level `s*(t)`: the lower edge of the purchase region.
    pub boundary: Vec<Option<f64>>,
    pub stats: SolveStats,
}

/// Optimal time to buy an American option priced `market` by the market and
/// `buyer` by the buyer.
pub fn american_purchase(
    model: &DefaultableModel,
    disc: &Discretization,
    market: &Surface,
    buyer: &Surface,
) -> Result<AmericanPurchase> {
    model.validate()?;
    disc.check_maturity(model.maturity)?;
    if *market.grid != *disc.grid || *buyer.grid != *disc.grid {
        return Err(Error::GridMismatch("American prices are not on the solver grid".into()));
    }
    let spread = buyer.sub(market, "spread_A")?;
    let ns = disc.grid.ns();
    let problem = ObstacleProblem::new(
        disc.grid.clone(),
        premium_coefficients(model.r, model.sigma, &model.buyer),
        vec![0.0; ns],
        |_| 0.0,
    )
    .with_obstacle(&spread.values, ObstacleSense::Floor)
    .with_scheme(disc.scheme)
    .with_psor(disc.psor)
    .with_region_tol(disc.region_tol)
    .with_label("J_A");
    let out = march(&problem)?;
    drop(problem);
    let tol = disc.region_tol;
    let gaps: Vec<Vec<f64>> = out
        .surface
        .values
        .iter()
        .zip(&spread.values)
        .map(|(j, psi)| {
            j.iter()
                .zip(psi)
                .map(|(&v, &o)| {
                    if o > tol.bound(o) {
                        (v - o).abs() - tol.bound(o)
                    } else {
                        f64::INFINITY
                    }
                })
                .collect()
        })
        .collect();
    let purchase_region = RegionSet::from_gaps(disc.grid.t(), disc.grid.s(), &gaps);
    let boundary = (0..disc.grid.nt()).map(|k| purchase_region.lower_crossing(k)).collect();
    let premium = out.surface.sub(&spread, "L_A")?;
    Ok(AmericanPurchase {
        spread,
        value: out.surface.with_measure("Q_tilde"),
        premium,
        purchase_region,
        boundary,
        stats: out.stats,
    })
}
