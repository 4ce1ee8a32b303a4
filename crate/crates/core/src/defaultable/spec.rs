use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lcp::{Grid1D, PsorSettings, RegionTolerance, Scheme};

fn default_lambda_max() -> f64 {
    5.0
}

/// Shape of a default intensity `λ(s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IntensityKind {
    Constant {
        lambda: f64,
    },
    /// `lambda0 * exp(-decay * (s - reference))`
    ExpLocal {
        lambda0: f64,
        decay: f64,
        reference: f64,
    },
    /// Linear interpolation of `(s, lambda)` pairs, flat outside.
    Table {
        s: Vec<f64>,
        lambda: Vec<f64>,
    },
}

/// A default intensity clamped to `[0, lambda_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensitySpec {
    #[serde(flatten)]
    pub kind: IntensityKind,
    #[serde(default = "default_lambda_max")]
    pub lambda_max: f64,
}

impl IntensitySpec {
    pub fn constant(lambda: f64) -> Self {
        IntensitySpec {
            kind: IntensityKind::Constant { lambda },
            lambda_max: default_lambda_max(),
        }
    }

    pub fn exp_local(lambda0: f64, decay: f64, reference: f64) -> Self {
        IntensitySpec {
            kind: IntensityKind::ExpLocal {
                lambda0,
                decay,
                reference,
            },
            lambda_max: default_lambda_max(),
        }
    }

    pub fn table(s: Vec<f64>, lambda: Vec<f64>) -> Self {
        IntensitySpec {
            kind: IntensityKind::Table { s, lambda },
            lambda_max: default_lambda_max(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_max >= 0.0) || !self.lambda_max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lambda_max must be finite and >= 0, got {}",
                self.lambda_max
            )));
        }
        match &self.kind {
            IntensityKind::Constant { lambda } if !(lambda.is_finite() && *lambda >= 0.0) => Err(
                Error::InvalidParameter(format!("constant intensity must be >= 0, got {lambda}")),
            ),
            IntensityKind::ExpLocal {
                lambda0,
                decay,
                reference,
            } if !(lambda0.is_finite() && *lambda0 >= 0.0 && decay.is_finite() && reference.is_finite()) => Err(
                Error::InvalidParameter("exp_local intensity needs finite lambda0 >= 0, decay, reference".into()),
            ),
            IntensityKind::Table { s, lambda } => {
                if s.is_empty() || s.len() != lambda.len() {
                    return Err(Error::InvalidParameter(
                        "intensity table needs equal, non-empty s and lambda".into(),
                    ));
                }
                if s.windows(2).any(|w| !(w[1] > w[0])) || s.iter().chain(lambda).any(|v| !v.is_finite()) {
                    return Err(Error::InvalidParameter(
                        "intensity table s must be finite and increasing".into(),
                    ));
                }
                if lambda.iter().any(|&l| l < 0.0) {
                    return Err(Error::InvalidParameter("intensity table values must be >= 0".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Clamped intensity at `(t, s)`.
    pub fn eval(&self, _t: f64, s: f64) -> f64 {
        let raw = match &self.kind {
            IntensityKind::Constant { lambda } => *lambda,
            IntensityKind::ExpLocal {
                lambda0,
                decay,
                reference,
            } => lambda0 * (-decay * (s - reference)).exp(),
            IntensityKind::Table { s: xs, lambda } => crate::lcp::grid::interp(xs, lambda, s),
        };
        raw.clamp(0.0, self.lambda_max)
    }

    /// The clamped constant, if the intensity does not depend on `s`.
    pub fn as_constant(&self) -> Option<f64> {
        match &self.kind {
            IntensityKind::Constant { lambda } => Some(lambda.clamp(0.0, self.lambda_max)),
            IntensityKind::ExpLocal { lambda0, decay, .. } if *decay == 0.0 || *lambda0 == 0.0 => {
                Some(self.eval(0.0, 0.0))
            }
            IntensityKind::Table { lambda, .. } if lambda.windows(2).all(|w| w[0] == w[1]) => {
                Some(lambda[0].clamp(0.0, self.lambda_max))
            }
            _ => None,
        }
    }

    /// Upper bound used for thinning.
    pub fn bound(&self) -> f64 {
        self.as_constant().unwrap_or(self.lambda_max)
    }
}

/// Terminal payoff `F(s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PayoffSpec {
    Call {
        strike: f64,
    },
    Put {
        strike: f64,
    },
    DigitalCall {
        strike: f64,
    },
    BullSpread {
        strike: f64,
        strike_high: f64,
    },
    /// Linear interpolation of `(s, value)` pairs, flat outside.
    Custom {
        s: Vec<f64>,
        values: Vec<f64>,
    },
}

impl PayoffSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            PayoffSpec::Call { strike } | PayoffSpec::Put { strike } | PayoffSpec::DigitalCall { strike } => {
                if !(strike.is_finite() && *strike > 0.0) {
                    return Err(Error::InvalidParameter(format!("strike must be > 0, got {strike}")));
                }
            }
            PayoffSpec::BullSpread { strike, strike_high } => {
                if !(strike.is_finite() && *strike > 0.0 && strike_high.is_finite() && strike < strike_high) {
                    return Err(Error::InvalidParameter(format!(
                        "bull spread needs 0 < strike < strike_high, got {strike}, {strike_high}"
                    )));
                }
            }
            PayoffSpec::Custom { s, values } => {
                if s.len() < 2 || s.len() != values.len() {
                    return Err(Error::InvalidParameter(
                        "custom payoff needs >= 2 equal-length s/value pairs".into(),
                    ));
                }
                if s.windows(2).any(|w| !(w[1] > w[0])) || s[0] < 0.0 {
                    return Err(Error::InvalidParameter(
                        "custom payoff s must be >= 0 and increasing".into(),
                    ));
                }
                if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(Error::InvalidParameter(
                        "custom payoff values must be finite and >= 0".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, s: f64) -> f64 {
        match self {
            PayoffSpec::Call { strike } => (s - strike).max(0.0),
            PayoffSpec::Put { strike } => (strike - s).max(0.0),
            PayoffSpec::DigitalCall { strike } => {
                if s > *strike {
                    1.0
                } else {
                    0.0
                }
            }
            PayoffSpec::BullSpread { strike, strike_high } => (s - strike).max(0.0) - (s - strike_high).max(0.0),
            PayoffSpec::Custom { s: xs, values } => crate::lcp::grid::interp(xs, values, s),
        }
    }

    /// Characteristic price level used to size grids and tolerances.
    pub fn scale(&self) -> f64 {
        match self {
            PayoffSpec::Call { strike }
            | PayoffSpec::Put { strike }
            | PayoffSpec::DigitalCall { strike }
            | PayoffSpec::BullSpread { strike, .. } => *strike,
            PayoffSpec::Custom { s, .. } => 0.5 * (s[0] + s[s.len() - 1]),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PayoffSpec::Call { .. } => "call",
            PayoffSpec::Put { .. } => "put",
            PayoffSpec::DigitalCall { .. } => "digital_call",
            PayoffSpec::BullSpread { .. } => "bull_spread",
            PayoffSpec::Custom { .. } => "custom",
        }
    }
}

/// Which pricing measure to use: the market's `Q` or the buyer's `Q~`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Market,
    Buyer,
}

/// Defaultable stock: `dS = (r + λ) S dt + σ S dW - S dN` under a pricing
/// measure with default intensity `λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefaultableModel {
    pub r: f64,
    pub sigma: f64,
    pub maturity: f64,
    pub market: IntensitySpec,
    pub buyer: IntensitySpec,
}

impl DefaultableModel {
    pub fn validate(&self) -> Result<()> {
        if !self.r.is_finite() {
            return Err(Error::InvalidParameter(format!("r must be finite, got {}", self.r)));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma must be > 0, got {}",
                self.sigma
            )));
        }
        if !(self.maturity.is_finite() && self.maturity > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "maturity must be > 0, got {}",
                self.maturity
            )));
        }
        self.market.validate()?;
        self.buyer.validate()
    }

    pub fn intensity(&self, side: Side) -> &IntensitySpec {
        match side {
            Side::Market => &self.market,
            Side::Buyer => &self.buyer,
        }
    }

    /// Copy with both sides using the given intensity.
    pub fn with_sides(&self, market: IntensitySpec, buyer: IntensitySpec) -> Self {
        DefaultableModel {
            market,
            buyer,
            ..self.clone()
        }
    }
}

/// Grid and solver choices, resolved against a contract by [`Numerics::build`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Numerics {
    /// Space intervals.
    pub m: usize,
    /// Time intervals.
    pub n: usize,
    /// Upper end of the price grid; `4 * scale` when absent.
    pub s_max: Option<f64>,
    pub scheme: Scheme,
    pub psor: PsorSettings,
    /// Defaults to [`RegionTolerance::for_strike`] of the contract scale.
    pub region_tol: Option<RegionTolerance>,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            m: 1000,
            n: 1000,
            s_max: None,
            scheme: Scheme::CrankNicolson,
            psor: PsorSettings::default(),
            region_tol: None,
        }
    }
}

impl Numerics {
    pub fn with_size(m: usize, n: usize) -> Self {
        Numerics {
            m,
            n,
            ..Default::default()
        }
    }

    pub fn build(&self, maturity: f64, scale: f64) -> Result<Discretization> {
        self.psor.validate()?;
        let s_max = self.s_max.unwrap_or(4.0 * scale);
        let grid = Arc::new(Grid1D::uniform(s_max, self.m, maturity, self.n)?);
        Ok(Discretization {
            grid,
            scheme: self.scheme,
            psor: self.psor,
            region_tol: self.region_tol.unwrap_or_else(|| RegionTolerance::for_strike(scale)),
        })
    }
}

/// A concrete grid plus solver settings shared by related solves.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub grid: Arc<Grid1D>,
    pub scheme: Scheme,
    pub psor: PsorSettings,
    pub region_tol: RegionTolerance,
}

impl Discretization {
    pub fn new(grid: Arc<Grid1D>, scale: f64) -> Self {
        Discretization {
            grid,
            scheme: Scheme::CrankNicolson,
            psor: PsorSettings::default(),
            region_tol: RegionTolerance::for_strike(scale),
        }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub(crate) fn check_maturity(&self, maturity: f64) -> Result<()> {
        if (self.grid.t_end() - maturity).abs() > 1e-12 * maturity.max(1.0) {
            return Err(Error::GridMismatch(format!(
                "grid ends at t = {}, model maturity is {maturity}",
                self.grid.t_end()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intensity_is_clamped() {
        let spec = IntensitySpec::exp_local(0.2, 0.2, 5.0);
        assert!((spec.eval(0.0, 5.0) - 0.2).abs() < 1e-15);
        let steep = IntensitySpec {
            lambda_max: 1.0,
            ..IntensitySpec::exp_local(0.2, 2.0, 5.0)
        };
        assert_eq!(steep.eval(0.0, 0.0), 1.0);
        assert_eq!(IntensitySpec::constant(0.3).as_constant(), Some(0.3));
        assert_eq!(spec.as_constant(), None);
    }

    #[test]
    fn intensity_table_interpolates_and_extrapolates_flat() {
        let spec = IntensitySpec::table(vec![1.0, 3.0], vec![0.1, 0.3]);
        assert!((spec.eval(0.0, 2.0) - 0.2).abs() < 1e-15);
        assert_eq!(spec.eval(0.0, 0.0), 0.1);
        assert_eq!(spec.eval(0.0, 9.0), 0.3);
        assert!(IntensitySpec::table(vec![1.0, 1.0], vec![0.1, 0.3]).validate().is_err());
    }

    #[test]
    fn payoffs() {
        assert_eq!(PayoffSpec::Call { strike: 5.0 }.eval(6.0), 1.0);
        assert_eq!(PayoffSpec::Put { strike: 5.0 }.eval(4.0), 1.0);
        assert_eq!(PayoffSpec::DigitalCall { strike: 5.0 }.eval(5.0), 0.0);
        let bull = PayoffSpec::BullSpread {
            strike: 5.0,
            strike_high: 6.0,
        };
        assert_eq!(bull.eval(9.0), 1.0);
        assert!(PayoffSpec::BullSpread {
            strike: 6.0,
            strike_high: 5.0
        }
        .validate()
        .is_err());
    }

    #[test]
    fn config_round_trip() {
        let json = r#"{"kind":"exp_local","lambda0":0.2,"decay":0.2,"reference":5.0}"#;
        let spec: IntensitySpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.lambda_max, 5.0);
        assert_eq!(spec, IntensitySpec::exp_local(0.2, 0.2, 5.0));
        let p: PayoffSpec = serde_json::from_str(r#"{"kind":"put","strike":5}"#).unwrap();
        assert_eq!(p, PayoffSpec::Put { strike: 5.0 });
    }
}
