use serde::Serialize;

use crate::error::{Error, Result};
use crate::lcp::{extract_region, march, ObstacleProblem, ObstacleSense, RegionSet, SolveStats, Surface};

use super::pricing::{drift_g, premium_coefficients, price_surface_with_stats, pricing_coefficients};
use super::spec::{DefaultableModel, Discretization, PayoffSpec, Side};

#[derive(Debug, Clone)]
pub struct ObstacleSolution {
    pub value: Surface,
    pub region: RegionSet,
    pub stats: SolveStats,
}

fn check_surface(disc: &Discretization, surface: &Surface) -> Result<()> {
    if *surface.grid != *disc.grid {
        return Err(Error::GridMismatch(format!(
            "'{}' is not on the solver grid",
            surface.label
        )));
    }
    Ok(())
}

/// Minimal expected purchase cost `V` under the buyer's measure, capped by
/// the market price. The region is the buy region `{V = P}`.
pub fn solve_min_cost(
    model: &DefaultableModel,
    payoff: &PayoffSpec,
    disc: &Discretization,
    market: &Surface,
) -> Result<ObstacleSolution> {
    model.validate()?;
    payoff.validate()?;
    disc.check_maturity(model.maturity)?;
    check_surface(disc, market)?;
    let (r, big_t) = (model.r, model.maturity);
    let f0 = payoff.eval(0.0);
    let terminal: Vec<f64> = disc.grid.s().iter().map(|&s| payoff.eval(s)).collect();
    let problem = ObstacleProblem::new(
        disc.grid.clone(),
        pricing_coefficients(r, model.sigma, &model.buyer),
        terminal,
        move |t| (-r * (big_t - t)).exp() * f0,
    )
    .with_obstacle(&market.values, ObstacleSense::Ceiling)
    .with_scheme(disc.scheme)
    .with_psor(disc.psor)
    .with_region_tol(disc.region_tol)
    .with_label("V");
    let out = march(&problem)?;
    Ok(ObstacleSolution {
        value: out.surface.with_measure("Q_tilde"),
        region: out.region,
        stats: out.stats,
    })
}

/// Delayed purchase premium `L`: zero floor, source `-G` under the buyer's
/// generator, zero at default and at maturity. The region is `{L = 0}`.
pub fn solve_delay_premium(
    model: &DefaultableModel,
    disc: &Discretization,
    drift: &Surface,
) -> Result<ObstacleSolution> {
    model.validate()?;
    disc.check_maturity(model.maturity)?;
    check_surface(disc, drift)?;
    let source: Vec<Vec<f64>> = drift.values.iter().map(|g| g.iter().map(|v| -v).collect()).collect();
    let zero = vec![vec![0.0; disc.grid.ns()]; disc.grid.nt()];
    let problem = ObstacleProblem::new(
        disc.grid.clone(),
        premium_coefficients(model.r, model.sigma, &model.buyer),
        vec![0.0; disc.grid.ns()],
        |_| 0.0,
    )
    .with_source(&source)
    .with_obstacle(&zero, ObstacleSense::Floor)
    .with_scheme(disc.scheme)
    .with_psor(disc.psor)
    .with_region_tol(disc.region_tol)
    .with_label("L");
    let out = march(&problem)?;
    Ok(ObstacleSolution {
        value: out.surface.with_measure("Q_tilde"),
        region: out.region,
        stats: out.stats,
    })
}

/// Every surface of the single-purchase timing problem on one grid.
#[derive(Debug, Clone)]
pub struct TimingAnalysis {
    pub market: Surface,
    pub buyer: Surface,
    pub drift: Surface,
    /// Minimal cost.
    pub cost: ObstacleSolution,
    /// Delayed purchase premium solved directly.
    pub premium: ObstacleSolution,
    /// Profit spread `J = P~ - V`.
    pub spread: Surface,
    pub stats: SolveStats,
}

/// Scalars of a [`TimingAnalysis`] at one spot, taken on the first time slice.
#[derive(Debug, Clone, Serialize)]
pub struct TimingPoint {
    pub s: f64,
    pub market_price: f64,
    pub buyer_price: f64,
    pub min_cost: f64,
    pub delay_premium: f64,
    pub delay_premium_from_cost: f64,
    pub profit_spread: f64,
}

impl TimingAnalysis {
    pub fn at(&self, s: f64) -> TimingPoint {
        let p = self.market.at_start(s);
        let v = self.cost.value.at_start(s);
        TimingPoint {
            s,
            market_price: p,
            buyer_price: self.buyer.at_start(s),
            min_cost: v,
            delay_premium: self.premium.value.at_start(s),
            delay_premium_from_cost: p - v,
            profit_spread: self.spread.at_start(s),
        }
    }

    /// `P - V`.
    pub fn premium_from_cost(&self) -> Result<Surface> {
        self.market.sub(&self.cost.value, "P_minus_V")
    }

    /// Buy region read off `{L = 0}` on the directly solved premium.
    pub fn premium_region(&self) -> &RegionSet {
        &self.premium.region
    }
}

/// Solve `P`, `P~`, `G`, `V`, `L` and `J`; the two prices run concurrently.
pub fn analyze(model: &DefaultableModel, payoff: &PayoffSpec, disc: &Discretization) -> Result<TimingAnalysis> {
    let (market, buyer) = rayon::join(
        || price_surface_with_stats(model, payoff, Side::Market, disc),
        || price_surface_with_stats(model, payoff, Side::Buyer, disc),
    );
    let (market, market_stats) = market?;
    let (buyer, buyer_stats) = buyer?;
    let drift = drift_g(model, &market)?;
    let (cost, premium) = rayon::join(
        || solve_min_cost(model, payoff, disc, &market),
        || solve_delay_premium(model, disc, &drift),
    );
    let (cost, premium) = (cost?, premium?);
    let spread = buyer.sub(&cost.value, "J")?;
    let mut stats = market_stats;
    for s in [&buyer_stats, &cost.stats, &premium.stats] {
        stats.merge(s);
    }
    Ok(TimingAnalysis {
        market,
        buyer,
        drift,
        cost,
        premium,
        spread,
        stats,
    })
}

/// Region where two surfaces agree, with the solver tolerance of `disc`.
pub fn agreement_region(a: &Surface, b: &Surface, disc: &Discretization) -> Result<RegionSet> {
    extract_region(a, b, disc.region_tol)
}
