use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::pricing::closed_form_price;
use super::spec::{DefaultableModel, PayoffSpec, Side};

const STEPS: usize = 500;
const BATCH: usize = 4096;

/// When the simulation switches from the buyer's intensity to the market's.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SwitchPolicy {
    /// `τ = 0`.
    Immediate,
    /// `τ = T`.
    Never,
    /// First monitoring time with `S >= level`, else `T`.
    UpCrossing { level: f64 },
    /// First monitoring time with `0 < S <= level`, else `T`.
    DownCrossing { level: f64 },
    /// Deterministic time, rounded down to the monitoring grid.
    FixedTime { t: f64 },
}

impl SwitchPolicy {
    fn validate(&self, maturity: f64) -> Result<()> {
        match *self {
            SwitchPolicy::UpCrossing { level } | SwitchPolicy::DownCrossing { level }
                if !(level.is_finite() && level > 0.0) =>
            {
                Err(Error::InvalidPolicy(format!(
                    "threshold must be finite and > 0, got {level}"
                )))
            }
            SwitchPolicy::FixedTime { t } if !(0.0..=maturity).contains(&t) => {
                Err(Error::InvalidPolicy(format!("switch time {t} outside [0, {maturity}]")))
            }
            _ => Ok(()),
        }
    }

    fn triggered(&self, step: usize, s: f64, dt: f64) -> bool {
        match *self {
            SwitchPolicy::Immediate => true,
            SwitchPolicy::Never => false,
            SwitchPolicy::UpCrossing { level } => s >= level,
            SwitchPolicy::DownCrossing { level } => s > 0.0 && s <= level,
            SwitchPolicy::FixedTime { t } => step as f64 * dt >= t - 1e-12 * dt,
        }
    }
}

/// What a simulated path pays.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum McMode {
    /// `e^{-rT} F(S_T)` with one side's intensity throughout.
    Side { side: Side },
    /// `e^{-rT} F(S_T)` under the buyer's intensity before the switch and the
    /// market's after it.
    Concatenated { policy: SwitchPolicy },
    /// `e^{-rτ} P(τ, S_τ)` under the buyer's intensity, with the closed-form
    /// market price `P` (constant market intensity only).
    StoppedMarketPrice { policy: SwitchPolicy },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub n_paths: usize,
}

impl McEstimate {
    /// Number of pooled standard errors separating two independent estimates.
    pub fn z_score(&self, other: &McEstimate) -> f64 {
        let pooled = (self.std_error.powi(2) + other.std_error.powi(2)).sqrt();
        (self.estimate - other.estimate).abs() / pooled
    }
}

struct PathSim<'a> {
    model: &'a DefaultableModel,
    payoff: &'a PayoffSpec,
    spot: f64,
    dt: f64,
    lambda_bound: f64,
}

impl PathSim<'_> {
    /// One log-Euler step; default arrives by thinning a Poisson clock at
    /// `lambda_bound` with acceptance `λ(t,S)/lambda_bound`.
    fn step<R: Rng>(&self, rng: &mut R, t: f64, s: f64, side: Side) -> f64 {
        let m = self.model;
        let lam = m.intensity(side).eval(t, s);
        let z: f64 = rng.sample(StandardNormal);
        if self.lambda_bound > 0.0 {
            let mut clock: f64 = rng.sample::<f64, _>(Exp1) / self.lambda_bound;
            while clock < self.dt {
                if rng.gen::<f64>() * self.lambda_bound < lam {
                    return 0.0;
                }
                clock += rng.sample::<f64, _>(Exp1) / self.lambda_bound;
            }
        }
        s * ((m.r + lam - 0.5 * m.sigma * m.sigma) * self.dt + m.sigma * self.dt.sqrt() * z).exp()
    }

    fn path<R: Rng>(&self, rng: &mut R, mode: &McMode) -> Result<f64> {
        let m = self.model;
        let mut s = self.spot;
        let (policy, stop_at_switch) = match mode {
            McMode::Side { side } => {
                let side = *side;
                for k in 0..STEPS {
                    if s > 0.0 {
                        s = self.step(rng, k as f64 * self.dt, s, side);
                    }
                }
                return Ok((-m.r * m.maturity).exp() * self.payoff.eval(s));
            }
            McMode::Concatenated { policy } => (policy, false),
            McMode::StoppedMarketPrice { policy } => (policy, true),
        };
        let mut switched = false;
        for k in 0..STEPS {
            let t = k as f64 * self.dt;
            if !switched && policy.triggered(k, s, self.dt) {
                switched = true;
                if stop_at_switch {
                    return Ok((-m.r * t).exp() * closed_form_price(m, self.payoff, Side::Market, t, s)?);
                }
            }
            if s > 0.0 {
                s = self.step(rng, t, s, if switched { Side::Market } else { Side::Buyer });
            }
        }
        Ok((-m.r * m.maturity).exp() * self.payoff.eval(s))
    }
}

/// Monte Carlo estimate with time step `T/500`, reproducible for a given
/// seed. Paths are split into fixed batches, each with its own ChaCha stream.
pub fn mc_price(
    model: &DefaultableModel,
    payoff: &PayoffSpec,
    mode: &McMode,
    spot: f64,
    n_paths: usize,
    seed: u64,
) -> Result<McEstimate> {
    model.validate()?;
    payoff.validate()?;
    if n_paths < 1000 {
        return Err(Error::InvalidParameter(format!(
            "need at least 1000 paths, got {n_paths}"
        )));
    }
    if !(spot.is_finite() && spot > 0.0) {
        return Err(Error::InvalidParameter(format!("spot must be > 0, got {spot}")));
    }
    match mode {
        McMode::Side { .. } => {}
        McMode::Concatenated { policy } => policy.validate(model.maturity)?,
        McMode::StoppedMarketPrice { policy } => {
            policy.validate(model.maturity)?;
            model.market.as_constant().ok_or(Error::NotConstantIntensity)?;
        }
    }
    let sim = PathSim {
        model,
        payoff,
        spot,
        dt: model.maturity / STEPS as f64,
        lambda_bound: model.market.bound().max(model.buyer.bound()),
    };
    let batches = n_paths.div_ceil(BATCH);
    let sums: Vec<(f64, f64)> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let count = BATCH.min(n_paths - b * BATCH);
            let (mut sum, mut sq) = (0.0, 0.0);
            for _ in 0..count {
                let x = sim.path(&mut rng, mode)?;
                sum += x;
                sq += x * x;
            }
            Ok((sum, sq))
        })
        .collect::<Result<_>>()?;
    let (sum, sq) = sums.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let n = n_paths as f64;
    let mean = sum / n;
    let var = ((sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(McEstimate {
        estimate: mean,
        std_error: (var / n).sqrt(),
        n_paths,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defaultable::spec::IntensitySpec;

    fn model() -> DefaultableModel {
        DefaultableModel {
            r: 0.05,
            sigma: 0.2,
            maturity: 1.0,
            market: IntensitySpec::constant(0.2),
            buyer: IntensitySpec::constant(0.25),
        }
    }

    #[test]
    fn reproducible_for_a_seed() {
        let p = PayoffSpec::Put { strike: 5.0 };
        let mode = McMode::Side { side: Side::Market };
        let a = mc_price(&model(), &p, &mode, 4.2, 2000, 7).unwrap();
        let b = mc_price(&model(), &p, &mode, 4.2, 2000, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = PayoffSpec::Put { strike: 5.0 };
        let bad = McMode::Concatenated {
            policy: SwitchPolicy::UpCrossing { level: -1.0 },
        };
        assert!(matches!(
            mc_price(&model(), &p, &bad, 4.2, 2000, 1),
            Err(Error::InvalidPolicy(_))
        ));
        let late = McMode::Concatenated {
            policy: SwitchPolicy::FixedTime { t: 2.0 },
        };
        assert!(matches!(
            mc_price(&model(), &p, &late, 4.2, 2000, 1),
            Err(Error::InvalidPolicy(_))
        ));
        let side = McMode::Side { side: Side::Buyer };
        assert!(mc_price(&model(), &p, &side, 4.2, 10, 1).is_err());
    }

    #[test]
    fn market_put_matches_closed_form() {
        let p = PayoffSpec::Put { strike: 5.0 };
        let m = model();
        let est = mc_price(&m, &p, &McMode::Side { side: Side::Market }, 4.2, 40_000, 3).unwrap();
        let exact = closed_form_price(&m, &p, Side::Market, 0.0, 4.2).unwrap();
        assert!(
            (est.estimate - exact).abs() <= 3.0 * est.std_error,
            "{est:?} vs {exact}"
        );
    }
}
