use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::defaultable::{DefaultableModel, McMode, Numerics, PayoffSpec};
use crate::lcp::{PsorSettings, Scheme};
use crate::perpetual::PerpetualParams;
use crate::stochvol::{SVModel, SvNumerics};

use super::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    European,
    Digital,
    American,
    Perpetual,
    Stochvol,
    Rolling,
    Buysell,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::European,
        Scenario::Digital,
        Scenario::American,
        Scenario::Perpetual,
        Scenario::Stochvol,
        Scenario::Rolling,
        Scenario::Buysell,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::European => "european",
            Scenario::Digital => "digital",
            Scenario::American => "american",
            Scenario::Perpetual => "perpetual",
            Scenario::Stochvol => "stochvol",
            Scenario::Rolling => "rolling",
            Scenario::Buysell => "buysell",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Scenario::ALL.into_iter().find(|x| x.name() == s).ok_or(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// `s` intervals.
    pub m: Option<usize>,
    /// Time intervals.
    pub n: Option<usize>,
    pub s_max: Option<f64>,
    /// `y` intervals (stochvol only).
    pub my: Option<usize>,
    pub y_range: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub scheme: Option<Scheme>,
    pub omega: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
}

impl SolverConfig {
    pub fn psor(&self) -> PsorSettings {
        let d = PsorSettings::default();
        PsorSettings {
            omega: self.omega.unwrap_or(d.omega),
            tol: self.tol.unwrap_or(d.tol),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: Option<PathBuf>,
    /// Data file formats; `summary.json` is always written.
    pub formats: Vec<Format>,
    pub emit_surfaces: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: None,
            formats: default_formats(),
            emit_surfaces: false,
        }
    }
}

impl OutputConfig {
    pub fn csv(&self) -> bool {
        self.formats.contains(&Format::Csv)
    }

    pub fn json(&self) -> bool {
        self.formats.contains(&Format::Json)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RollConfig {
    pub long_maturity: f64,
    pub short_maturity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub n_paths: usize,
    pub spot: f64,
    pub modes: Vec<McMode>,
}

/// One scenario document; `M` is the model block for the scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig<M> {
    pub scenario: String,
    pub model: M,
    #[serde(default)]
    pub payoff: Option<PayoffSpec>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
    /// Spots at which scalars are reported.
    #[serde(default)]
    pub spots: Vec<f64>,
    /// Factor levels at which two-factor scalars are reported.
    #[serde(default)]
    pub y_points: Vec<f64>,
    #[serde(default)]
    pub roll: Option<RollConfig>,
    #[serde(default)]
    pub mc: Option<McConfig>,
}

impl<M> ScenarioConfig<M> {
    pub fn payoff(&self) -> Result<&PayoffSpec, CliError> {
        let p = self
            .payoff
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("payoff: required for scenario '{}'", self.scenario)))?;
        p.validate().map_err(|e| CliError::Config(format!("payoff: {e}")))?;
        Ok(p)
    }

    pub fn numerics(&self) -> Result<Numerics, CliError> {
        if self.grid.my.is_some() || self.grid.y_range.is_some() {
            return Err(CliError::Config(
                "grid: my/y_range only apply to the stochvol scenario".into(),
            ));
        }
        let d = Numerics::default();
        let numerics = Numerics {
            m: self.grid.m.unwrap_or(d.m),
            n: self.grid.n.unwrap_or(d.n),
            s_max: self.grid.s_max,
            scheme: self.solver.scheme.unwrap_or(d.scheme),
            psor: self.solver.psor(),
            region_tol: None,
        };
        numerics
            .psor
            .validate()
            .map_err(|e| CliError::Config(format!("solver: {e}")))?;
        Ok(numerics)
    }

    pub fn sv_numerics(&self) -> Result<SvNumerics, CliError> {
        if self.solver.scheme.is_some_and(|s| s != Scheme::Implicit) {
            return Err(CliError::Config(
                "solver.scheme: the two-factor solver is fully implicit".into(),
            ));
        }
        let d = SvNumerics::default();
        let numerics = SvNumerics {
            m: self.grid.m.unwrap_or(d.m),
            my: self.grid.my.unwrap_or(d.my),
            n: self.grid.n.unwrap_or(d.n),
            s_max: self.grid.s_max,
            y_range: self.grid.y_range,
            psor: self.solver.psor(),
            region_tol: None,
        };
        numerics
            .psor
            .validate()
            .map_err(|e| CliError::Config(format!("solver: {e}")))?;
        Ok(numerics)
    }
}

/// A parsed document, typed by scenario.
#[derive(Debug, Clone)]
pub enum Config {
    Defaultable(Scenario, ScenarioConfig<DefaultableModel>),
    Perpetual(ScenarioConfig<PerpetualParams>),
    StochVol(ScenarioConfig<SVModel>),
}

impl Config {
    pub fn scenario(&self) -> Scenario {
        match self {
            Config::Defaultable(s, _) => *s,
            Config::Perpetual(_) => Scenario::Perpetual,
            Config::StochVol(_) => Scenario::Stochvol,
        }
    }

    pub fn output(&self) -> &OutputConfig {
        match self {
            Config::Defaultable(_, c) => &c.output,
            Config::Perpetual(c) => &c.output,
            Config::StochVol(c) => &c.output,
        }
    }
}

fn typed<M: DeserializeOwned>(text: &str) -> Result<ScenarioConfig<M>, CliError> {
    let mut de = serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Config(format!("{path}: {}", e.into_inner()))
    })
}

/// Parse and validate a scenario document.
pub fn parse_config(text: &str) -> Result<Config, CliError> {
    let raw: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("malformed JSON: {e}")))?;
    let name = raw
        .get("scenario")
        .ok_or_else(|| CliError::Config("scenario: missing field".into()))?
        .as_str()
        .ok_or_else(|| CliError::Config("scenario: expected a string".into()))?;
    let scenario: Scenario = name.parse().map_err(|_| CliError::UnknownScenario(name.to_string()))?;
    let config = match scenario {
        Scenario::Perpetual => {
            let c: ScenarioConfig<PerpetualParams> = typed(text)?;
            c.model
                .validate()
                .map_err(|e| CliError::Config(format!("model: {e}")))?;
            Config::Perpetual(c)
        }
        Scenario::Stochvol => {
            let c: ScenarioConfig<SVModel> = typed(text)?;
            c.model
                .validate()
                .map_err(|e| CliError::Config(format!("model: {e}")))?;
            c.payoff()?;
            c.sv_numerics()?;
            Config::StochVol(c)
        }
        other => {
            let c: ScenarioConfig<DefaultableModel> = typed(text)?;
            c.model
                .validate()
                .map_err(|e| CliError::Config(format!("model: {e}")))?;
            let payoff = c.payoff()?;
            c.numerics()?;
            match other {
                Scenario::Digital if !matches!(payoff, PayoffSpec::DigitalCall { .. }) => {
                    return Err(CliError::Config(
                        "payoff.kind: the digital scenario needs a digital_call payoff".into(),
                    ));
                }
                Scenario::American if !matches!(payoff, PayoffSpec::Put { .. }) => {
                    return Err(CliError::Config(
                        "payoff.kind: the american scenario needs a put payoff".into(),
                    ));
                }
                Scenario::Rolling if c.roll.is_none() => {
                    return Err(CliError::Config("roll: required for the rolling scenario".into()));
                }
                _ => {}
            }
            Config::Defaultable(other, c)
        }
    };
    let spots = match &config {
        Config::Defaultable(_, c) => &c.spots,
        Config::Perpetual(c) => &c.spots,
        Config::StochVol(c) => &c.spots,
    };
    if let Some(bad) = spots.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
        return Err(CliError::Config(format!(
            "spots: every spot must be finite and > 0, got {bad}"
        )));
    }
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_scenario_is_distinguished() {
        let e = parse_config(r#"{"scenario": "asian", "model": {}}"#).unwrap_err();
        assert!(matches!(e, CliError::UnknownScenario(_)));
    }

    #[test]
    fn field_errors_carry_a_path_and_position() {
        let text = "{\n  \"scenario\": \"european\",\n  \"model\": {\"r\": 0.05, \"sigma\": \"high\"}\n}";
        let CliError::Config(msg) = parse_config(text).unwrap_err() else {
            panic!("expected a config error");
        };
        assert!(msg.starts_with("model.sigma"), "{msg}");
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{"scenario": "perpetual", "model": {"r": 0.05, "sigma": 0.2, "strike": 5,
            "lambda_market": 0.025, "lambda_buyer": 0.05}, "grdi": {}}"#;
        let CliError::Config(msg) = parse_config(text).unwrap_err() else {
            panic!("expected a config error");
        };
        assert!(msg.contains("grdi"), "{msg}");
    }

    #[test]
    fn digital_needs_a_digital_payoff() {
        let text = r#"{"scenario": "digital", "model": {"r": 0.05, "sigma": 0.2, "maturity": 1,
            "market": {"kind": "constant", "lambda": 0.2}, "buyer": {"kind": "constant", "lambda": 0.25}},
            "payoff": {"kind": "put", "strike": 5}}"#;
        assert!(matches!(parse_config(text), Err(CliError::Config(_))));
    }
}
