//! Two-factor stochastic volatility: `dS = μS dt + σ(Y)S dW`,
//! `dY = b(Y) dt + c dZ` with `d<W,Z> = ρ dt`. Each side prices with its own
//! volatility risk premium `φ(y)`, so under its measure `Y` has drift
//! `b - ρcκ - ρ̂cφ` with `ρ̂ = √(1-ρ²)` and `κ` the Sharpe ratio of `S`.
//!
//! Under the buyer's measure the discounted market price drifts at
//! `-ρ̂c(φ~-φ)∂P/∂y`, so the delayed purchase premium `L = P - V` solves a
//! zero-floor problem with source `ρ̂c(φ~-φ)∂P/∂y`. A larger premium lowers
//! the price of a payoff whose price increases with `y`; waiting then pays
//! when `φ~ > φ`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::defaultable::{PayoffSpec, Side};
use crate::error::{Error, Result};
use crate::lcp::{
    march_2d, Grid2D, NodeCoefficients2D, ObstacleProblem2D, ObstacleSense, PsorSettings, Region2D, RegionTolerance,
    SolveStats, Surface2D,
};

/// Volatility level `σ(y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VolFunction {
    Constant {
        sigma: f64,
    },
    /// `σ_min + (σ_max - σ_min) / (1 + exp(-(y - center)/scale))`; increasing.
    Logistic {
        sigma_min: f64,
        sigma_max: f64,
        center: f64,
        scale: f64,
    },
}

impl VolFunction {
    pub fn eval(&self, y: f64) -> f64 {
        match *self {
            VolFunction::Constant { sigma } => sigma,
            VolFunction::Logistic {
                sigma_min,
                sigma_max,
                center,
                scale,
            } => sigma_min + (sigma_max - sigma_min) / (1.0 + (-(y - center) / scale).exp()),
        }
    }

    /// `σ' > 0` everywhere.
    pub fn is_increasing(&self) -> bool {
        matches!(self, VolFunction::Logistic { sigma_min, sigma_max, .. } if sigma_max > sigma_min)
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            VolFunction::Constant { sigma } => sigma.is_finite() && sigma > 0.0,
            VolFunction::Logistic {
                sigma_min,
                sigma_max,
                center,
                scale,
            } => {
                sigma_min > 0.0 && sigma_max >= sigma_min && sigma_max.is_finite() && center.is_finite() && scale > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "volatility must be bounded away from zero and infinity: {self:?}"
            )))
        }
    }
}

/// Volatility risk premium `φ(y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Premium {
    Constant {
        phi: f64,
    },
    /// `level + amplitude * tanh((y - center)/scale)`.
    Tanh {
        level: f64,
        amplitude: f64,
        center: f64,
        scale: f64,
    },
}

impl Premium {
    pub fn eval(&self, y: f64) -> f64 {
        match *self {
            Premium::Constant { phi } => phi,
            Premium::Tanh {
                level,
                amplitude,
                center,
                scale,
            } => level + amplitude * ((y - center) / scale).tanh(),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Premium::Constant { phi } => phi.is_finite(),
            Premium::Tanh {
                level,
                amplitude,
                center,
                scale,
            } => level.is_finite() && amplitude.is_finite() && center.is_finite() && scale > 0.0 && scale.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("premium must be bounded: {self:?}")))
        }
    }
}

/// Stochastic volatility model with mean-reverting factor
/// `b(y) = mean_reversion (long_run - y)` and constant `c = vol_of_vol`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SVModel {
    pub r: f64,
    pub maturity: f64,
    pub rho: f64,
    pub vol: VolFunction,
    pub mean_reversion: f64,
    pub long_run: f64,
    pub vol_of_vol: f64,
    /// Sharpe ratio `κ` of the stock.
    #[serde(default)]
    pub sharpe: f64,
    pub market_premium: Premium,
    pub buyer_premium: Premium,
}

impl Default for SVModel {
    fn default() -> Self {
        SVModel {
            r: 0.05,
            maturity: 1.0,
            rho: -0.5,
            vol: VolFunction::Logistic {
                sigma_min: 0.1,
                sigma_max: 0.4,
                center: 0.0,
                scale: 0.5,
            },
            mean_reversion: 2.0,
            long_run: 0.0,
            vol_of_vol: 0.5,
            sharpe: 0.0,
            market_premium: Premium::Constant { phi: 0.0 },
            buyer_premium: Premium::Constant { phi: 0.0 },
        }
    }
}

impl SVModel {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.r, self.long_run, self.sharpe].iter().all(|x| x.is_finite());
        if !finite || !(self.maturity > 0.0 && self.maturity.is_finite()) {
            return Err(Error::InvalidParameter(
                "rate, maturity and Sharpe ratio must be finite, maturity > 0".into(),
            ));
        }
        if !(self.rho >= -1.0 && self.rho <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "rho must lie in [-1, 1], got {}",
                self.rho
            )));
        }
        if !(self.vol_of_vol >= 0.0 && self.vol_of_vol.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "vol_of_vol must be >= 0, got {}",
                self.vol_of_vol
            )));
        }
        if !(self.mean_reversion >= 0.0 && self.mean_reversion.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "mean_reversion must be >= 0, got {}",
                self.mean_reversion
            )));
        }
        self.vol.validate()?;
        self.market_premium.validate()?;
        self.buyer_premium.validate()
    }

    /// `√(1-ρ²)`.
    pub fn rho_hat(&self) -> f64 {
        (1.0 - self.rho * self.rho).max(0.0).sqrt()
    }

    pub fn premium(&self, side: Side) -> &Premium {
        match side {
            Side::Market => &self.market_premium,
            Side::Buyer => &self.buyer_premium,
        }
    }

    /// `φ~(y) - φ(y)`.
    pub fn premium_spread(&self, y: f64) -> f64 {
        self.buyer_premium.eval(y) - self.market_premium.eval(y)
    }

    /// Default `y` range: the long-run mean plus or minus five stationary
    /// standard deviations, or plus or minus one without mean reversion or
    /// noise.
    pub fn default_y_range(&self) -> (f64, f64) {
        let half = if self.vol_of_vol > 0.0 && self.mean_reversion > 0.0 {
            5.0 * self.vol_of_vol / (2.0 * self.mean_reversion).sqrt()
        } else {
            1.0
        };
        (self.long_run - half, self.long_run + half)
    }

    /// Generator coefficients under one side's measure.
    pub fn coefficients(&self, side: Side) -> impl Fn(f64, f64, f64) -> NodeCoefficients2D + Send + Sync + '_ {
        let premium = *self.premium(side);
        let (c, rho_hat) = (self.vol_of_vol, self.rho_hat());
        move |_t, s, y| {
            let sigma = self.vol.eval(y);
            NodeCoefficients2D {
                ss: 0.5 * sigma * sigma * s * s,
                yy: 0.5 * c * c,
                sy: self.rho * sigma * c * s,
                s: self.r * s,
                y: self.mean_reversion * (self.long_run - y)
                    - self.rho * c * self.sharpe
                    - rho_hat * c * premium.eval(y),
                discount: self.r,
                source: 0.0,
            }
        }
    }
}

/// Grid and solver choices for two-factor solves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvNumerics {
    /// `s` intervals.
    pub m: usize,
    /// `y` intervals.
    pub my: usize,
    /// Time intervals.
    pub n: usize,
    /// `4 * scale` when absent.
    pub s_max: Option<f64>,
    /// [`SVModel::default_y_range`] when absent.
    pub y_range: Option<(f64, f64)>,
    pub psor: PsorSettings,
    pub region_tol: Option<RegionTolerance>,
}

impl Default for SvNumerics {
    fn default() -> Self {
        SvNumerics {
            m: 200,
            my: 100,
            n: 200,
            s_max: None,
            y_range: None,
            psor: PsorSettings::default(),
            region_tol: None,
        }
    }
}

impl SvNumerics {
    pub fn with_size(m: usize, my: usize, n: usize) -> Self {
        SvNumerics {
            m,
            my,
            n,
            ..Default::default()
        }
    }

    pub fn build(&self, model: &SVModel, scale: f64) -> Result<SvDiscretization> {
        model.validate()?;
        self.psor.validate()?;
        let s_max = self.s_max.unwrap_or(4.0 * scale);
        let y_range = self.y_range.unwrap_or_else(|| model.default_y_range());
        Ok(SvDiscretization {
            grid: Arc::new(Grid2D::uniform(
                s_max,
                self.m,
                y_range,
                self.my,
                model.maturity,
                self.n,
            )?),
            psor: self.psor,
            region_tol: self.region_tol.unwrap_or_else(|| RegionTolerance::for_strike(scale)),
        })
    }
}

#[derive(Debug, Clone)]
pub struct SvDiscretization {
    pub grid: Arc<Grid2D>,
    pub psor: PsorSettings,
    pub region_tol: RegionTolerance,
}

impl SvDiscretization {
    fn check(&self, model: &SVModel) -> Result<()> {
        let t_end = self.grid.t()[self.grid.nt() - 1];
        if (t_end - model.maturity).abs() > 1e-12 * model.maturity.max(1.0) {
            return Err(Error::GridMismatch(format!(
                "grid ends at {t_end}, model maturity is {}",
                model.maturity
            )));
        }
        Ok(())
    }

    fn check_surface(&self, surface: &Surface2D) -> Result<()> {
        if *surface.grid != *self.grid {
            return Err(Error::GridMismatch(format!(
                "'{}' is not on the solver grid",
                surface.label
            )));
        }
        Ok(())
    }

    fn payoff_slice(&self, payoff: &PayoffSpec) -> Vec<f64> {
        let s = self.grid.s();
        (0..self.grid.nodes()).map(|n| payoff.eval(s[n % s.len()])).collect()
    }
}

#[derive(Debug, Clone)]
pub struct SvSolution {
    pub value: Surface2D,
    pub region: Region2D,
    pub stats: SolveStats,
}

fn side_tags(side: Side) -> (&'static str, &'static str) {
    match side {
        Side::Market => ("P", "Q"),
        Side::Buyer => ("P_tilde", "Q_tilde"),
    }
}

/// Price surface under one side's premium. At `s = 0` the value is
/// `e^{-r(T-t)} F(0)` for every `y`.
pub fn price_surface_2d(
    model: &SVModel,
    payoff: &PayoffSpec,
    side: Side,
    disc: &SvDiscretization,
) -> Result<(Surface2D, SolveStats)> {
    model.validate()?;
    payoff.validate()?;
    disc.check(model)?;
    let (r, big_t, f0) = (model.r, model.maturity, payoff.eval(0.0));
    let (label, measure) = side_tags(side);
    let problem = ObstacleProblem2D::new(
        disc.grid.clone(),
        model.coefficients(side),
        disc.payoff_slice(payoff),
        move |t, _| (-r * (big_t - t)).exp() * f0,
    )
    .with_psor(disc.psor)
    .with_region_tol(disc.region_tol)
    .with_label(label);
    let out = march_2d(&problem)?;
    Ok((out.surface.with_measure(measure), out.stats))
}

/// `∂u/∂y` of one slice: central inside, one-sided on the `y` edges.
pub fn dy(grid: &Grid2D, slice: &[f64]) -> Vec<f64> {
    let (ns, y) = (grid.ns(), grid.y());
    let ny = y.len();
    let mut d = vec![0.0; slice.len()];
    for j in 0..ny {
        let (lo, hi) = if j == 0 {
            (0, 1)
        } else if j == ny - 1 {
            (ny - 2, ny - 1)
        } else {
            (j - 1, j + 1)
        };
        let h = y[hi] - y[lo];
        for i in 0..ns {
            d[j * ns + i] = (slice[hi * ns + i] - slice[lo * ns + i]) / h;
        }
    }
    d
}

/// Drift `G = (φ~ - φ) ∂P/∂y` from the market surface.
pub fn drift_g_sv(model: &SVModel, market: &Surface2D) -> Result<Surface2D> {
    model.validate()?;
    let g = &market.grid;
    let t_end = g.t()[g.nt() - 1];
    if (t_end - model.maturity).abs() > 1e-12 * model.maturity.max(1.0) {
        return Err(Error::GridMismatch(
            "market surface does not span the model maturity".into(),
        ));
    }
    let (ns, y) = (g.ns(), g.y());
    let values = market
        .values
        .iter()
        .map(|p| {
            dy(g, p)
                .into_iter()
                .enumerate()
                .map(|(n, d)| model.premium_spread(y[n / ns]) * d)
                .collect()
        })
        .collect();
    Surface2D::new(g.clone(), values, "G")
}

/// Source of the premium problem, `ρ̂ c G`.
pub fn premium_source(model: &SVModel, drift: &Surface2D) -> Vec<Vec<f64>> {
    let w = model.rho_hat() * model.vol_of_vol;
    drift.values.iter().map(|g| g.iter().map(|v| w * v).collect()).collect()
}

/// Minimal expected purchase cost under the buyer's premium, capped by the
/// market price. The region is the buy region `{V = P}`.
pub fn solve_v_2d(
    model: &SVModel,
    payoff: &PayoffSpec,
    disc: &SvDiscretization,
    market: &Surface2D,
) -> Result<SvSolution> {
    model.validate()?;
    payoff.validate()?;
    disc.check(model)?;
    disc.check_surface(market)?;
    let (r, big_t, f0) = (model.r, model.maturity, payoff.eval(0.0));
    let problem = ObstacleProblem2D::new(
        disc.grid.clone(),
        model.coefficients(Side::Buyer),
        disc.payoff_slice(payoff),
        move |t, _| (-r * (big_t - t)).exp() * f0,
    )
    .with_obstacle(&market.values, ObstacleSense::Ceiling)
    .with_psor(disc.psor)
    .with_region_tol(disc.region_tol)
    .with_label("V");
    let out = march_2d(&problem)?;
    Ok(SvSolution {
        value: out.surface.with_measure("Q_tilde"),
        region: out.region,
        stats: out.stats,
    })
}

/// Delayed purchase premium: zero floor, source `ρ̂ c G`, zero at `s = 0`
/// and at maturity. The region is `{L = 0}`.
pub fn solve_l_2d(model: &SVModel, disc: &SvDiscretization, drift: &Surface2D) -> Result<SvSolution> {
    model.validate()?;
    disc.check(model)?;
    disc.check_surface(drift)?;
    let source = premium_source(model, drift);
    let zero = vec![vec![0.0; disc.grid.nodes()]; disc.grid.nt()];
    let problem = ObstacleProblem2D::new(
        disc.grid.clone(),
        model.coefficients(Side::Buyer),
        vec![0.0; disc.grid.nodes()],
        |_, _| 0.0,
    )
    .with_source(&source)
    .with_obstacle(&zero, ObstacleSense::Floor)
    .with_psor(disc.psor)
    .with_region_tol(disc.region_tol)
    .with_label("L");
    let out = march_2d(&problem)?;
    Ok(SvSolution {
        value: out.surface.with_measure("Q_tilde"),
        region: out.region,
        stats: out.stats,
    })
}

/// All surfaces of the two-factor timing problem.
#[derive(Debug, Clone)]
pub struct SvAnalysis {
    pub market: Surface2D,
    pub buyer: Surface2D,
    pub drift: Surface2D,
    pub cost: SvSolution,
    pub premium: SvSolution,
    pub stats: SolveStats,
}

impl SvAnalysis {
    /// `P - V`.
    pub fn premium_from_cost(&self) -> Result<Surface2D> {
        self.market.sub(&self.cost.value, "P_minus_V")
    }
}

pub fn analyze_sv(model: &SVModel, payoff: &PayoffSpec, disc: &SvDiscretization) -> Result<SvAnalysis> {
    let (market, buyer) = rayon::join(
        || price_surface_2d(model, payoff, Side::Market, disc),
        || price_surface_2d(model, payoff, Side::Buyer, disc),
    );
    let ((market, mut stats), (buyer, buyer_stats)) = (market?, buyer?);
    let drift = drift_g_sv(model, &market)?;
    let (cost, premium) = rayon::join(
        || solve_v_2d(model, payoff, disc, &market),
        || solve_l_2d(model, disc, &drift),
    );
    let (cost, premium) = (cost?, premium?);
    for s in [&buyer_stats, &cost.stats, &premium.stats] {
        stats.merge(s);
    }
    Ok(SvAnalysis {
        market,
        buyer,
        drift,
        cost,
        premium,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defaultable::{price_surface, DefaultableModel, IntensitySpec, Numerics};
    use crate::lcp::{Grid1D, Scheme};
    use crate::num::{bs_price, BsKind, BsParams};

    fn put() -> PayoffSpec {
        PayoffSpec::Put { strike: 5.0 }
    }

    fn flat(sigma: f64) -> SVModel {
        SVModel {
            vol: VolFunction::Constant { sigma },
            ..SVModel::default()
        }
    }

    fn small(model: &SVModel) -> SvDiscretization {
        SvNumerics::with_size(100, 12, 50).build(model, 5.0).unwrap()
    }

    #[test]
    fn logistic_vol_is_bounded_and_increasing() {
        let v = SVModel::default().vol;
        assert!(v.is_increasing());
        let xs: Vec<f64> = (-50..=50).map(|k| v.eval(k as f64 * 0.2)).collect();
        assert!(xs.windows(2).all(|w| w[1] >= w[0]));
        assert!(xs.iter().all(|&x| (0.1..=0.4).contains(&x)));
    }

    #[test]
    fn rejects_bad_models() {
        let m = SVModel {
            vol_of_vol: -0.1,
            ..SVModel::default()
        };
        assert!(m.validate().is_err());
        let m = SVModel {
            rho: 1.5,
            ..SVModel::default()
        };
        assert!(m.validate().is_err());
        let m = flat(0.0);
        assert!(m.validate().is_err());
    }

    #[test]
    fn flat_vol_without_noise_is_black_scholes() {
        let m = SVModel {
            vol_of_vol: 0.0,
            ..flat(0.2)
        };
        let disc = SvNumerics::with_size(200, 4, 400).build(&m, 5.0).unwrap();
        let (p, _) = price_surface_2d(&m, &put(), Side::Market, &disc).unwrap();
        for s in [3.0, 4.2, 5.0, 6.0] {
            let exact = bs_price(&BsParams::new(s, 5.0, 0.05, 0.2, 1.0).unwrap(), BsKind::Put).unwrap();
            assert!((p.at(0, s, 0.0) - exact).abs() < 1e-3, "{s}");
        }
    }

    #[test]
    fn equal_premia_give_equal_prices() {
        let m = SVModel {
            market_premium: Premium::Constant { phi: 0.1 },
            buyer_premium: Premium::Constant { phi: 0.1 },
            ..SVModel::default()
        };
        let disc = small(&m);
        let (a, _) = price_surface_2d(&m, &put(), Side::Market, &disc).unwrap();
        let (b, _) = price_surface_2d(&m, &put(), Side::Buyer, &disc).unwrap();
        assert!(a.max_abs_diff(&b).unwrap() <= 1e-12);
        assert_eq!(drift_g_sv(&m, &a).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn degenerates_to_one_factor() {
        let m = SVModel {
            vol_of_vol: 0.0,
            ..flat(0.2)
        };
        let disc = small(&m);
        let (p2, _) = price_surface_2d(&m, &put(), Side::Market, &disc).unwrap();
        let grid = Arc::new(Grid1D::new(disc.grid.s().to_vec(), disc.grid.t().to_vec()).unwrap());
        let one = DefaultableModel {
            r: m.r,
            sigma: 0.2,
            maturity: m.maturity,
            market: IntensitySpec::constant(0.0),
            buyer: IntensitySpec::constant(0.0),
        };
        let d1 = crate::defaultable::Discretization::new(grid, 5.0).with_scheme(Scheme::Implicit);
        let p1 = price_surface(&one, &put(), Side::Market, &d1).unwrap();
        for k in 0..disc.grid.nt() {
            for j in 0..disc.grid.ny() {
                let line = p2.line(k, j);
                let err = line
                    .iter()
                    .zip(&p1.values[k])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                assert!(err < 1e-6, "k={k} j={j} err={err}");
            }
        }
        let _ = Numerics::default();
    }

    #[test]
    fn complete_market_has_no_premium() {
        let m = SVModel {
            rho: 1.0,
            market_premium: Premium::Constant { phi: 0.0 },
            buyer_premium: Premium::Constant { phi: 0.3 },
            ..SVModel::default()
        };
        let disc = small(&m);
        let (p, _) = price_surface_2d(&m, &put(), Side::Market, &disc).unwrap();
        let g = drift_g_sv(&m, &p).unwrap();
        let l = solve_l_2d(&m, &disc, &g).unwrap();
        assert!(l.value.max_abs() <= 1e-12);
    }

    #[test]
    fn larger_buyer_premium_means_waiting() {
        let m = SVModel {
            buyer_premium: Premium::Constant { phi: 0.3 },
            ..SVModel::default()
        };
        let disc = small(&m);
        let a = analyze_sv(&m, &put(), &disc).unwrap();
        let g = &a.drift;
        let (mut worst, mut at) = (0.0, (0, 0));
        for (k, v) in g.values.iter().enumerate() {
            for (n, &x) in v.iter().enumerate() {
                if x < worst {
                    worst = x;
                    at = (k, n);
                }
            }
        }
        let ns = g.grid.ns();
        assert!(
            worst >= -5e-6,
            "min G {worst} at k={} i={} j={}",
            at.0,
            at.1 % ns,
            at.1 / ns
        );
        // never buying: V = P~, L = P - P~
        assert!(a.cost.value.max_abs_diff(&a.buyer).unwrap() < 5e-3);
        let spread = a.market.sub(&a.buyer, "P-P~").unwrap();
        assert!(a.premium.value.max_abs_diff(&spread).unwrap() < 5e-3);
        assert!(a.premium_from_cost().unwrap().max_abs_diff(&a.premium.value).unwrap() < 5e-3);
    }

    #[test]
    fn smaller_buyer_premium_means_buying_now() {
        let m = SVModel {
            buyer_premium: Premium::Constant { phi: -0.3 },
            ..SVModel::default()
        };
        let disc = small(&m);
        let a = analyze_sv(&m, &put(), &disc).unwrap();
        assert!(a.cost.value.max_abs_diff(&a.market).unwrap() < 5e-3);
        assert!(a.premium.value.max_abs() < 5e-3);
    }
}
