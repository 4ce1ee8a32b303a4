use crate::error::{Error, Result};
use crate::lcp::{march, NodeCoefficients, ObstacleProblem, SolveStats, Surface};
use crate::num::{bs_price, norm_cdf, norm_pdf, BsKind, BsParams};

use super::spec::{DefaultableModel, Discretization, IntensitySpec, PayoffSpec, Side};

/// Generator coefficients of the price equation under intensity `λ`:
/// `a = σ²s²/2`, `b = (r+λ)s`, `c = r+λ`, jump rate `λ`.
pub(crate) fn pricing_coefficients<'a>(
    r: f64,
    sigma: f64,
    intensity: &'a IntensitySpec,
) -> impl Fn(f64, f64) -> NodeCoefficients + Send + Sync + 'a {
    move |t, s| {
        let lam = intensity.eval(t, s);
        NodeCoefficients {
            diffusion: 0.5 * sigma * sigma * s * s,
            drift: (r + lam) * s,
            discount: r + lam,
            jump: lam,
            source: 0.0,
        }
    }
}

/// Coefficients with the jump term removed; for problems whose value at
/// `s = 0` is zero.
pub(crate) fn premium_coefficients<'a>(
    r: f64,
    sigma: f64,
    intensity: &'a IntensitySpec,
) -> impl Fn(f64, f64) -> NodeCoefficients + Send + Sync + 'a {
    let base = pricing_coefficients(r, sigma, intensity);
    move |t, s| NodeCoefficients {
        jump: 0.0,
        ..base(t, s)
    }
}

pub fn side_label(side: Side) -> &'static str {
    match side {
        Side::Market => "P",
        Side::Buyer => "P_tilde",
    }
}

pub fn measure_tag(side: Side) -> &'static str {
    match side {
        Side::Market => "Q",
        Side::Buyer => "Q_tilde",
    }
}

/// Closed-form price with constant intensity at `(t, s)`.
pub fn closed_form_price(model: &DefaultableModel, payoff: &PayoffSpec, side: Side, t: f64, s: f64) -> Result<f64> {
    let lam = model.intensity(side).as_constant().ok_or(Error::NotConstantIntensity)?;
    let tau = model.maturity - t;
    if tau < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "t = {t} is after maturity {}",
            model.maturity
        )));
    }
    if s <= 0.0 {
        return Ok((-model.r * tau).exp() * payoff.eval(0.0));
    }
    let bs = |strike: f64, kind: BsKind| bs_price(&BsParams::new(s, strike, model.r + lam, model.sigma, tau)?, kind);
    match payoff {
        PayoffSpec::Call { strike } => bs(*strike, BsKind::Call),
        PayoffSpec::Put { strike } => {
            Ok(bs(*strike, BsKind::Put)? + strike * (-model.r * tau).exp() * (1.0 - (-lam * tau).exp()))
        }
        PayoffSpec::DigitalCall { strike } => bs(*strike, BsKind::DigitalCall),
        PayoffSpec::BullSpread { strike, strike_high } => {
            Ok(bs(*strike, BsKind::Call)? - bs(*strike_high, BsKind::Call)?)
        }
        PayoffSpec::Custom { .. } => Err(Error::InvalidParameter("custom payoffs have no closed form".into())),
    }
}

/// Closed-form drift `G` for constant intensities: call and put share
/// `(λ~-λ) K e^{-(r+λ)τ} Φ(d2)`; the digital call has
/// `(λ~-λ) e^{-(r+λ)τ} (φ(d2)/(σ√τ) - Φ(d2))`.
pub fn closed_form_drift(model: &DefaultableModel, payoff: &PayoffSpec, t: f64, s: f64) -> Result<f64> {
    let lam = model.market.as_constant().ok_or(Error::NotConstantIntensity)?;
    let lam_b = model.buyer.as_constant().ok_or(Error::NotConstantIntensity)?;
    let tau = model.maturity - t;
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter("closed-form drift needs t < T".into()));
    }
    if s <= 0.0 {
        return Ok(0.0);
    }
    let rate = model.r + lam;
    let d2 = |k: f64| BsParams::new(s, k, rate, model.sigma, tau).map(|p| p.d1_d2().1);
    let disc = (-rate * tau).exp();
    match payoff {
        PayoffSpec::Call { strike } | PayoffSpec::Put { strike } => {
            Ok((lam_b - lam) * strike * disc * norm_cdf(d2(*strike)?))
        }
        PayoffSpec::DigitalCall { strike } => {
            let d = d2(*strike)?;
            Ok((lam_b - lam) * disc * (norm_pdf(d) / (model.sigma * tau.sqrt()) - norm_cdf(d)))
        }
        PayoffSpec::BullSpread { strike, strike_high } => {
            Ok((lam_b - lam) * disc * (strike * norm_cdf(d2(*strike)?) - strike_high * norm_cdf(d2(*strike_high)?)))
        }
        PayoffSpec::Custom { .. } => Err(Error::InvalidParameter("custom payoffs have no closed form".into())),
    }
}

/// Price surface under the chosen side's intensity, with the output stats.
pub fn price_surface_with_stats(
    model: &DefaultableModel,
    payoff: &PayoffSpec,
    side: Side,
    disc: &Discretization,
) -> Result<(Surface, SolveStats)> {
    model.validate()?;
    payoff.validate()?;
    disc.check_maturity(model.maturity)?;
    let (r, big_t) = (model.r, model.maturity);
    let f0 = payoff.eval(0.0);
    let terminal: Vec<f64> = disc.grid.s().iter().map(|&s| payoff.eval(s)).collect();
    let problem = ObstacleProblem::new(
        disc.grid.clone(),
        pricing_coefficients(r, model.sigma, model.intensity(side)),
        terminal,
        move |t| (-r * (big_t - t)).exp() * f0,
    )
    .with_scheme(disc.scheme)
    .with_psor(disc.psor)
    .with_region_tol(disc.region_tol)
    .with_label(side_label(side));
    let out = march(&problem)?;
    Ok((out.surface.with_measure(measure_tag(side)), out.stats))
}

/// European price surface; `s = 0` carries the default value
/// `e^{-r(T-t)} F(0)`.
pub fn price_surface(
    model: &DefaultableModel,
    payoff: &PayoffSpec,
    side: Side,
    disc: &Discretization,
) -> Result<Surface> {
    price_surface_with_stats(model, payoff, side, disc).map(|(s, _)| s)
}

/// `∂u/∂s` of one slice: fourth-order central differences on uniform
/// interior nodes, second order next to the edges, one-sided at the edges.
pub(crate) fn ds(values: &[f64], s: &[f64]) -> Vec<f64> {
    let n = values.len();
    let uniform = crate::lcp::grid::is_uniform(s);
    let mut d = vec![0.0; n];
    d[0] = (values[1] - values[0]) / (s[1] - s[0]);
    d[n - 1] = (values[n - 1] - values[n - 2]) / (s[n - 1] - s[n - 2]);
    for i in 1..n - 1 {
        if uniform && i >= 2 && i + 2 < n {
            let h = s[1] - s[0];
            d[i] = (values[i - 2] - 8.0 * values[i - 1] + 8.0 * values[i + 1] - values[i + 2]) / (12.0 * h);
        } else {
            let (hm, hp) = (s[i] - s[i - 1], s[i + 1] - s[i]);
            d[i] = (-hp / (hm * (hm + hp))) * values[i - 1]
                + ((hp - hm) / (hm * hp)) * values[i]
                + (hm / (hp * (hm + hp))) * values[i + 1];
        }
    }
    d
}

/// Drift `G = (λ~ - λ)(s ∂P/∂s + P(t,0) - P)` from the market surface.
pub fn drift_g(model: &DefaultableModel, market: &Surface) -> Result<Surface> {
    model.validate()?;
    if (market.grid.t_end() - model.maturity).abs() > 1e-12 * model.maturity.max(1.0) {
        return Err(Error::GridMismatch(
            "market surface does not span the model maturity".into(),
        ));
    }
    Ok(drift_on_grid(model, market))
}

/// [`drift_g`] for a surface on any time window.
pub(crate) fn drift_on_grid(model: &DefaultableModel, market: &Surface) -> Surface {
    let s = market.grid.s();
    let values = market
        .grid
        .t()
        .iter()
        .zip(&market.values)
        .map(|(&t, p)| {
            let dp = ds(p, s);
            (0..s.len())
                .map(|i| {
                    let spread = model.buyer.eval(t, s[i]) - model.market.eval(t, s[i]);
                    spread * (s[i] * dp[i] + p[0] - p[i])
                })
                .collect()
        })
        .collect();
    Surface {
        grid: market.grid.clone(),
        values,
        label: "G".into(),
        measure: market.measure.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defaultable::spec::Numerics;

    fn fig1(buyer: IntensitySpec) -> DefaultableModel {
        DefaultableModel {
            r: 0.05,
            sigma: 0.2,
            maturity: 1.0,
            market: IntensitySpec::constant(0.2),
            buyer,
        }
    }

    #[test]
    fn zero_intensity_is_black_scholes() {
        let m =
            fig1(IntensitySpec::constant(0.0)).with_sides(IntensitySpec::constant(0.0), IntensitySpec::constant(0.0));
        let p = PayoffSpec::Put { strike: 5.0 };
        let bs = bs_price(&BsParams::new(4.2, 5.0, 0.05, 0.2, 1.0).unwrap(), BsKind::Put).unwrap();
        assert!((closed_form_price(&m, &p, Side::Market, 0.0, 4.2).unwrap() - bs).abs() < 1e-15);
    }

    #[test]
    fn put_at_default_state() {
        let m = fig1(IntensitySpec::constant(0.2));
        let p = PayoffSpec::Put { strike: 5.0 };
        let v = closed_form_price(&m, &p, Side::Market, 0.25, 0.0).unwrap();
        assert!((v - 5.0 * (-0.05f64 * 0.75).exp()).abs() < 1e-15);
    }

    #[test]
    fn non_constant_intensity_has_no_closed_form() {
        let m = fig1(IntensitySpec::exp_local(0.2, 0.2, 5.0));
        let p = PayoffSpec::Put { strike: 5.0 };
        assert!(matches!(
            closed_form_price(&m, &p, Side::Buyer, 0.0, 4.0),
            Err(Error::NotConstantIntensity)
        ));
    }

    #[test]
    fn constant_payoff_is_discounted() {
        let m = fig1(IntensitySpec::exp_local(0.2, 0.2, 5.0));
        let p = PayoffSpec::Custom {
            s: vec![0.0, 20.0],
            values: vec![2.0, 2.0],
        };
        let disc = Numerics::with_size(100, 50).build(1.0, 5.0).unwrap();
        let surf = price_surface(&m, &p, Side::Buyer, &disc).unwrap();
        for (k, &t) in disc.grid.t().iter().enumerate() {
            let want = 2.0 * (-0.05 * (1.0 - t)).exp();
            let err = surf.values[k].iter().map(|v| (v - want).abs()).fold(0.0, f64::max);
            assert!(err < 1e-5, "k={k} err={err}");
        }
    }

    #[test]
    fn equal_intensities_give_zero_drift() {
        let m = fig1(IntensitySpec::constant(0.2));
        let disc = Numerics::with_size(200, 50).build(1.0, 5.0).unwrap();
        let p = price_surface(&m, &PayoffSpec::Put { strike: 5.0 }, Side::Market, &disc).unwrap();
        assert_eq!(drift_g(&m, &p).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn derivative_is_exact_for_cubics() {
        let s: Vec<f64> = (0..=20).map(|i| i as f64 * 0.5).collect();
        let v: Vec<f64> = s.iter().map(|x| x * x * x).collect();
        let d = ds(&v, &s);
        for i in 2..18 {
            assert!((d[i] - 3.0 * s[i] * s[i]).abs() < 1e-10);
        }
    }
}
