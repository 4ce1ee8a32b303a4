//! Two uses of the timing machinery on the defaultable model: rolling a
//! short-dated option into a long-dated one within a window, and buying an
//! option now to sell it later.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::defaultable::pricing::{drift_on_grid, pricing_coefficients};
use crate::defaultable::{american_purchase, price_surface_with_stats, DefaultableModel, Numerics, PayoffSpec, Side};
use crate::defaultable::{Discretization, ObstacleSolution};
use crate::error::{Error, Result};
use crate::lcp::{march, Grid1D, ObstacleProblem, ObstacleSense, RegionSet, SolveStats, Surface};

/// Hold the short leg (maturity `T1`) and switch into the long leg
/// (maturity `T`) at some time in `[T - T1, T1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RollSpec {
    pub long_maturity: f64,
    pub short_maturity: f64,
    pub payoff: PayoffSpec,
}

impl RollSpec {
    /// `[T - T1, T1]`.
    pub fn window(&self) -> (f64, f64) {
        (self.long_maturity - self.short_maturity, self.short_maturity)
    }

    pub fn validate(&self) -> Result<()> {
        self.payoff.validate()?;
        let (start, end) = self.window();
        let ok = start > 0.0 && start <= end && end < self.long_maturity && self.long_maturity.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::WindowEmpty { start, end })
        }
    }
}

#[derive(Debug, Clone)]
pub struct RollingResult {
    /// `P(t,s;T)` on `[0, T1]`.
    pub long_leg: Surface,
    /// `P(t,s;T1)`.
    pub short_leg: Surface,
    /// Rolling cost `h = P(·;T) - P(·;T1)`.
    pub cost: Surface,
    /// Minimal expected rolling cost under the buyer's measure.
    pub value: Surface,
    /// Delayed rolling premium `h - V_roll`; meaningful inside the window.
    pub premium: Surface,
    /// `{V_roll = h}` inside the window.
    pub region: RegionSet,
    /// `G(·;T) - G(·;T1)`, the drift of the discounted cost under the
    /// buyer's measure.
    pub source: Surface,
    pub stats: SolveStats,
}

impl RollingResult {
    /// Whether the cost drift takes both signs at interior nodes.
    pub fn source_changes_sign(&self) -> bool {
        let tol = 1e-10;
        let interior = self.source.values.iter().flat_map(|v| &v[1..v.len() - 1]);
        let (mut pos, mut neg) = (false, false);
        for &g in interior {
            pos |= g > tol;
            neg |= g < -tol;
        }
        pos && neg
    }
}

fn linear_march(
    model: &DefaultableModel,
    side: Side,
    disc: &Discretization,
    grid: Arc<Grid1D>,
    terminal: Vec<f64>,
    label: &str,
) -> Result<(Surface, SolveStats)> {
    // the value at s = 0 only discounts
    let (r, f0, t_end) = (model.r, terminal[0], grid.t_end());
    let problem = ObstacleProblem::new(
        grid,
        pricing_coefficients(r, model.sigma, model.intensity(side)),
        terminal,
        move |t| (-r * (t_end - t)).exp() * f0,
    )
    .with_scheme(disc.scheme)
    .with_psor(disc.psor)
    .with_region_tol(disc.region_tol)
    .with_label(label);
    let out = march(&problem)?;
    Ok((out.surface, out.stats))
}

/// Optimal rolling. The long leg is marched on `[T1, T]` and its `T1`
/// slice restarts the march on the `[0, T1]` grid, so both legs share every
/// node of the short grid. The rolling obstacle is switched on at the first
/// grid time `>= T - T1`.
pub fn rolling_value(model: &DefaultableModel, roll: &RollSpec, numerics: &Numerics) -> Result<RollingResult> {
    roll.validate()?;
    let (big_t, t1) = (roll.long_maturity, roll.short_maturity);
    let long_model = DefaultableModel {
        maturity: big_t,
        ..model.clone()
    };
    let short_model = DefaultableModel {
        maturity: t1,
        ..model.clone()
    };
    long_model.validate()?;
    let disc = numerics.build(t1, roll.payoff.scale())?;
    let grid = disc.grid.clone();
    let s = grid.s().to_vec();

    let n_long = ((numerics.n as f64) * (big_t - t1) / t1).round().max(1.0) as usize;
    let long_times: Vec<f64> = (0..=n_long)
        .map(|k| {
            if k == n_long {
                big_t
            } else {
                t1 + (big_t - t1) * k as f64 / n_long as f64
            }
        })
        .collect();
    let long_grid = Arc::new(Grid1D::new(s.clone(), long_times)?);
    let payoff: Vec<f64> = s.iter().map(|&x| roll.payoff.eval(x)).collect();

    let (tail, short) = rayon::join(
        || linear_march(&long_model, Side::Market, &disc, long_grid, payoff.clone(), "P_long"),
        || price_surface_with_stats(&short_model, &roll.payoff, Side::Market, &disc),
    );
    let ((tail, mut stats), (short_leg, short_stats)) = (tail?, short?);
    stats.merge(&short_stats);
    let at_t1 = tail.values[0].clone();
    let (long_leg, head_stats) = linear_march(&long_model, Side::Market, &disc, grid.clone(), at_t1, "P_long")?;
    stats.merge(&head_stats);

    let cost = long_leg.sub(&short_leg, "h")?;
    let start = big_t - t1;
    let tol = 1e-12 * big_t;
    let obstacle: Vec<Vec<f64>> = grid
        .t()
        .iter()
        .zip(&cost.values)
        .map(|(&t, h)| {
            if t >= start - tol {
                h.clone()
            } else {
                vec![f64::INFINITY; h.len()]
            }
        })
        .collect();
    let (r, f0) = (model.r, roll.payoff.eval(0.0));
    let problem = ObstacleProblem::new(
        grid.clone(),
        pricing_coefficients(r, model.sigma, &model.buyer),
        cost.values[grid.nt() - 1].clone(),
        move |t| f0 * ((-r * (big_t - t)).exp() - (-r * (t1 - t)).exp()),
    )
    .with_obstacle(&obstacle, ObstacleSense::Ceiling)
    .with_scheme(disc.scheme)
    .with_psor(disc.psor)
    .with_region_tol(disc.region_tol)
    .with_label("V_roll");
    let out = march(&problem)?;
    stats.merge(&out.stats);
    let value = out.surface.with_measure("Q_tilde");
    let premium = cost.sub(&value, "L_roll")?;
    let source = drift_on_grid(&long_model, &long_leg).zip_with(
        &drift_on_grid(&short_model, &short_leg),
        "G_roll",
        |a, b| a - b,
    )?;
    Ok(RollingResult {
        long_leg,
        short_leg,
        cost,
        value,
        premium,
        region: out.region,
        source,
        stats,
    })
}

#[derive(Debug, Clone)]
pub struct BuySellResult {
    pub market: Surface,
    pub buyer: Surface,
    /// Optimal sale value `R = sup E~[e^{-rτ} P_τ]`.
    pub resale: Surface,
    /// Two-stage value `U = sup E~[e^{-rτ}(R_τ - P_τ)]`.
    pub value: Surface,
    /// `{R = P}`.
    pub sell_region: RegionSet,
    /// `{U = R - P}` where `R - P` is strictly positive.
    pub buy_region: RegionSet,
    pub stats: SolveStats,
}

/// Sale value: a floor problem on the market price under the buyer's
/// generator.
pub fn solve_resale(
    model: &DefaultableModel,
    payoff: &PayoffSpec,
    disc: &Discretization,
    market: &Surface,
) -> Result<ObstacleSolution> {
    model.validate()?;
    payoff.validate()?;
    if *market.grid != *disc.grid {
        return Err(Error::GridMismatch("market price is not on the solver grid".into()));
    }
    let (r, big_t, f0) = (model.r, model.maturity, payoff.eval(0.0));
    let problem = ObstacleProblem::new(
        disc.grid.clone(),
        pricing_coefficients(r, model.sigma, &model.buyer),
        market.values[disc.grid.nt() - 1].clone(),
        move |t| (-r * (big_t - t)).exp() * f0,
    )
    .with_obstacle(&market.values, ObstacleSense::Floor)
    .with_scheme(disc.scheme)
    .with_psor(disc.psor)
    .with_region_tol(disc.region_tol)
    .with_label("R");
    let out = march(&problem)?;
    Ok(ObstacleSolution {
        value: out.surface.with_measure("Q_tilde"),
        region: out.region,
        stats: out.stats,
    })
}

/// Purchase stage given a sale value: floor `R - P`, zero at default and
/// maturity. Returns `U` and the buy region.
pub fn solve_buy_stage(
    model: &DefaultableModel,
    disc: &Discretization,
    market: &Surface,
    resale: &Surface,
) -> Result<ObstacleSolution> {
    let stage = american_purchase(model, disc, market, resale)?;
    Ok(ObstacleSolution {
        value: stage.value.relabel("U"),
        region: stage.purchase_region,
        stats: stage.stats,
    })
}

/// Buy then sell, solved as the sale problem followed by the purchase
/// problem on the sale value.
pub fn buy_sell(model: &DefaultableModel, payoff: &PayoffSpec, disc: &Discretization) -> Result<BuySellResult> {
    let (market, buyer) = rayon::join(
        || price_surface_with_stats(model, payoff, Side::Market, disc),
        || price_surface_with_stats(model, payoff, Side::Buyer, disc),
    );
    let ((market, mut stats), (buyer, buyer_stats)) = (market?, buyer?);
    stats.merge(&buyer_stats);
    let resale = solve_resale(model, payoff, disc, &market)?;
    stats.merge(&resale.stats);
    let stage = solve_buy_stage(model, disc, &market, &resale.value)?;
    stats.merge(&stage.stats);
    Ok(BuySellResult {
        market,
        buyer,
        resale: resale.value,
        value: stage.value,
        sell_region: resale.region,
        buy_region: stage.region,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defaultable::IntensitySpec;

    fn model(market: f64, buyer: f64) -> DefaultableModel {
        DefaultableModel {
            r: 0.05,
            sigma: 0.2,
            maturity: 1.0,
            market: IntensitySpec::constant(market),
            buyer: IntensitySpec::constant(buyer),
        }
    }

    fn roll(t1: f64) -> RollSpec {
        RollSpec {
            long_maturity: 2.0,
            short_maturity: t1,
            payoff: PayoffSpec::Put { strike: 5.0 },
        }
    }

    #[test]
    fn empty_window_is_rejected() {
        let err = rolling_value(&model(0.2, 0.2), &roll(0.8), &Numerics::with_size(50, 20)).unwrap_err();
        assert!(matches!(err, Error::WindowEmpty { .. }));
        assert!(roll(2.0).validate().is_err());
        assert!(roll(1.0).validate().is_ok());
    }

    #[test]
    fn agreeing_buyer_pays_no_rolling_premium() {
        let out = rolling_value(&model(0.2, 0.2), &roll(1.5), &Numerics::with_size(200, 100)).unwrap();
        assert!(out.premium.max_abs() <= 5e-7 * 5.0, "{}", out.premium.max_abs());
    }

    #[test]
    fn coinciding_legs_cost_nothing() {
        let out = rolling_value(&model(0.2, 0.3), &roll(1.999), &Numerics::with_size(200, 100)).unwrap();
        assert!(out.value.max_abs() < 1e-2, "{}", out.value.max_abs());
    }

    #[test]
    fn rolling_drift_takes_both_signs() {
        let out = rolling_value(&model(0.2, 0.3), &roll(1.5), &Numerics::with_size(200, 100)).unwrap();
        assert!(out.source_changes_sign());
    }

    #[test]
    fn positive_drift_buys_now_and_holds() {
        // constant λ~ > λ and a put: G >= 0
        let m = model(0.2, 0.25);
        let disc = Numerics::with_size(200, 100).build(1.0, 5.0).unwrap();
        let out = buy_sell(&m, &PayoffSpec::Put { strike: 5.0 }, &disc).unwrap();
        let spread = out.buyer.sub(&out.market, "spread").unwrap();
        let err = (0..disc.grid.ns())
            .map(|i| (out.value.values[0][i] - spread.values[0][i]).abs())
            .fold(0.0, f64::max);
        assert!(err < 5e-3, "{err}");
    }

    #[test]
    fn negative_drift_never_buys() {
        let m = model(0.25, 0.2);
        let disc = Numerics::with_size(200, 100).build(1.0, 5.0).unwrap();
        let out = buy_sell(&m, &PayoffSpec::Put { strike: 5.0 }, &disc).unwrap();
        assert!(out.value.max_abs() < 5e-3);
        assert!(out.buy_region.is_empty());
    }

    #[test]
    fn raising_the_sale_value_raises_u_by_at_most_eps() {
        let m = model(0.2, 0.25);
        let disc = Numerics::with_size(100, 50).build(1.0, 5.0).unwrap();
        let out = buy_sell(&m, &PayoffSpec::Put { strike: 5.0 }, &disc).unwrap();
        let eps = 1e-3;
        // bump before maturity and away from default, where U is pinned to 0
        let mut bumped = out.resale.map("R_eps", |v| v + eps);
        let last = bumped.values.len() - 1;
        bumped.values[last] = out.resale.values[last].clone();
        for (b, r) in bumped.values.iter_mut().zip(&out.resale.values) {
            b[0] = r[0];
        }
        let u = solve_buy_stage(&m, &disc, &out.market, &bumped).unwrap().value;
        let diff: Vec<f64> = u
            .values
            .iter()
            .flatten()
            .zip(out.value.values.iter().flatten())
            .map(|(a, b)| a - b)
            .collect();
        assert!(diff.iter().all(|&d| d >= -1e-8 && d <= eps + 1e-8));
    }
}
