use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Map, Value};

use crate::applications::{buy_sell, rolling_value, RollSpec};
use crate::defaultable::{
    american_exercise, american_purchase, analyze, closed_form_price, mc_price, DefaultableModel, PayoffSpec, Side,
};
use crate::error::Error;
use crate::io::{
    write_boundary_2d_csv, write_boundary_csv, write_json, write_surface_2d_csv, write_surface_csv, BoundaryColumn,
    RegionSummary,
};
use crate::lcp::{Region2D, RegionSet, SolveStats, Surface, Surface2D};
use crate::perpetual::{perpetual_put, purchase_threshold, timing_value, PerpetualParams};
use crate::stochvol::{analyze_sv, SVModel};

use super::config::{parse_config, Config, OutputConfig, Scenario, ScenarioConfig};
use super::CliError;

/// Overrides the configured output directory.
pub const OUT_ENV: &str = "PURCHASE_TIMING_OUT";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Takes precedence over the environment and the config.
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub scenario: Scenario,
    pub out_dir: PathBuf,
    pub summary: Value,
    pub seconds: f64,
}

fn output_dir(config: &OutputConfig, opts: &RunOptions) -> PathBuf {
    opts.out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .or_else(|| config.directory.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Parse, solve and write every output of one scenario document. Nothing is
/// written when the document is invalid.
pub fn run_text(text: &str, opts: &RunOptions) -> Result<RunReport, CliError> {
    let config = parse_config(text)?;
    let scenario = config.scenario();
    let dir = output_dir(config.output(), opts);
    fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
    let start = Instant::now();
    let outcome = execute(&config, &dir);
    let seconds = start.elapsed().as_secs_f64();
    let runtime = json!({"scenario": scenario.name(), "seconds": seconds});
    write_json(&dir.join("runtime.json"), &runtime)?;
    match outcome {
        Ok((results, stats)) => {
            let mut summary = json!({
                "scenario": scenario.name(),
                "status": "ok",
                "results": results,
            });
            if let Some(stats) = stats {
                summary["solver"] = stats_json(&stats);
            }
            write_json(&dir.join("summary.json"), &summary)?;
            Ok(RunReport {
                scenario,
                out_dir: dir,
                summary,
                seconds,
            })
        }
        Err(e) => {
            let summary = json!({
                "scenario": scenario.name(),
                "status": "error",
                "error": {"kind": error_kind(&e), "message": e.to_string()},
            });
            write_json(&dir.join("summary.json"), &summary)?;
            Err(match e {
                Error::Io(msg) => CliError::Io(msg),
                other => CliError::Solver(other),
            })
        }
    }
}

pub fn run_file(path: &Path, opts: &RunOptions) -> Result<RunReport, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    run_text(&text, opts)
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidParameter(_) => "invalid_parameter",
        Error::InvalidGrid(_) => "invalid_grid",
        Error::GridMismatch(_) => "grid_mismatch",
        Error::NoBracket { .. } => "no_bracket",
        Error::MaxIter { .. } => "max_iter",
        Error::SingularPivot { .. } => "singular_pivot",
        Error::MaxIterExceeded { .. } => "max_iter_exceeded",
        Error::NotConstantIntensity => "not_constant_intensity",
        Error::WrongOrdering { .. } => "wrong_ordering",
        Error::InvalidPolicy(_) => "invalid_policy",
        Error::WindowEmpty { .. } => "window_empty",
        Error::Io(_) => "io",
    }
}

fn stats_json(s: &SolveStats) -> Value {
    json!({
        "steps": s.steps,
        "psor_iterations": s.psor_iterations,
        "max_residual": s.max_residual,
        "non_dominant_steps": s.non_dominant_steps,
    })
}

type Outcome = Result<(Value, Option<SolveStats>), Error>;

fn execute(config: &Config, dir: &Path) -> Outcome {
    match config {
        Config::Defaultable(Scenario::American, c) => run_american(c, dir),
        Config::Defaultable(Scenario::Rolling, c) => run_rolling(c, dir),
        Config::Defaultable(Scenario::Buysell, c) => run_buysell(c, dir),
        Config::Defaultable(_, c) => run_european(c, dir),
        Config::Perpetual(c) => run_perpetual(c, dir),
        Config::StochVol(c) => run_stochvol(c, dir),
    }
}

fn spots<M>(c: &ScenarioConfig<M>, default: f64) -> Vec<f64> {
    if c.spots.is_empty() {
        vec![default]
    } else {
        c.spots.clone()
    }
}

fn payoff<M>(c: &ScenarioConfig<M>) -> Result<&PayoffSpec, Error> {
    c.payoff
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("payoff missing".into()))
}

fn config_err(e: CliError) -> Error {
    Error::InvalidParameter(e.to_string())
}

fn surface_file(dir: &Path, s: &Surface) -> Result<(), Error> {
    write_surface_csv(&dir.join(format!("surface_{}.csv", s.label)), s)
}

fn surface_2d_file(dir: &Path, s: &Surface2D) -> Result<(), Error> {
    write_surface_2d_csv(&dir.join(format!("surface_{}.csv", s.label)), s)
}

/// Whether the interior of slice `k` of a surface takes both signs.
fn changes_sign(values: &[f64], tol: f64) -> bool {
    let interior = &values[1..values.len() - 1];
    interior.iter().any(|&v| v > tol) && interior.iter().any(|&v| v < -tol)
}

fn region_json(region: &RegionSet) -> Value {
    serde_json::to_value(RegionSummary::of(region)).unwrap_or(Value::Null)
}

type Crossings = (Vec<Option<f64>>, Vec<Option<f64>>, Vec<Option<f64>>);

fn lower_upper(region: &RegionSet) -> Crossings {
    let nt = region.times.len();
    (
        (0..nt).map(|k| region.critical(k)).collect(),
        (0..nt).map(|k| region.lower_crossing(k)).collect(),
        (0..nt).map(|k| region.upper_crossing(k)).collect(),
    )
}

fn write_region_boundary(dir: &Path, output: &OutputConfig, region: &RegionSet) -> Result<(), Error> {
    let (star, lower, upper) = lower_upper(region);
    if output.csv() {
        write_boundary_csv(
            &dir.join("boundary.csv"),
            &region.times,
            &[
                BoundaryColumn {
                    name: "s_star",
                    values: &star,
                },
                BoundaryColumn {
                    name: "s_lower",
                    values: &lower,
                },
                BoundaryColumn {
                    name: "s_upper",
                    values: &upper,
                },
            ],
        )?;
    }
    if output.json() {
        write_json(
            &dir.join("boundary.json"),
            &json!({"t": region.times, "s_star": star, "s_lower": lower, "s_upper": upper}),
        )?;
    }
    Ok(())
}

fn run_european(c: &ScenarioConfig<DefaultableModel>, dir: &Path) -> Outcome {
    let m = &c.model;
    let payoff = payoff(c)?;
    let disc = c.numerics().map_err(config_err)?.build(m.maturity, payoff.scale())?;
    let a = analyze(m, payoff, &disc)?;
    let points: Vec<Value> = spots(c, payoff.scale())
        .into_iter()
        .map(|s| {
            let mut p = serde_json::to_value(a.at(s)).unwrap_or(Value::Null);
            for (key, side) in [("market_closed_form", Side::Market), ("buyer_closed_form", Side::Buyer)] {
                if let Ok(v) = closed_form_price(m, payoff, side, 0.0, s) {
                    p[key] = json!(v);
                }
            }
            p
        })
        .collect();
    let nt = disc.grid.nt();
    let drift_every_slice = (0..nt - 1).all(|k| changes_sign(&a.drift.values[k], 1e-12));
    let spread = a.buyer.sub(&a.market, "spread")?;
    let consistency = a.premium_from_cost()?.max_abs_diff(&a.premium.value)?;
    let mut results = Map::new();
    results.insert("payoff".into(), json!(payoff.name()));
    results.insert("points".into(), Value::Array(points));
    results.insert("buy_region".into(), region_json(&a.cost.region));
    results.insert("premium_zero_region".into(), region_json(&a.premium.region));
    results.insert("drift_changes_sign_every_slice".into(), json!(drift_every_slice));
    results.insert(
        "spread_changes_sign_at_start".into(),
        json!(changes_sign(&spread.values[0], 1e-12)),
    );
    results.insert("max_abs_premium_minus_cost_gap".into(), json!(consistency));
    if let Some(mc) = &c.mc {
        let estimates = mc
            .modes
            .iter()
            .map(|mode| {
                let e = mc_price(m, payoff, mode, mc.spot, mc.n_paths, c.seed)?;
                Ok(json!({"mode": mode, "estimate": e.estimate, "std_error": e.std_error, "n_paths": e.n_paths}))
            })
            .collect::<Result<Vec<_>, Error>>()?;
        results.insert("monte_carlo".into(), Value::Array(estimates));
    }
    write_region_boundary(dir, &c.output, &a.cost.region)?;
    if c.output.emit_surfaces && c.output.csv() {
        for s in [
            &a.market,
            &a.buyer,
            &a.drift,
            &a.cost.value,
            &a.premium.value,
            &a.spread,
        ] {
            surface_file(dir, s)?;
        }
    }
    Ok((Value::Object(results), Some(a.stats)))
}

fn run_american(c: &ScenarioConfig<DefaultableModel>, dir: &Path) -> Outcome {
    let m = &c.model;
    let payoff = payoff(c)?;
    let PayoffSpec::Put { strike } = *payoff else {
        return Err(Error::InvalidParameter("american scenario needs a put".into()));
    };
    let disc = c.numerics().map_err(config_err)?.build(m.maturity, strike)?;
    let (market, buyer) = rayon::join(
        || american_exercise(m, strike, Side::Market, &disc),
        || american_exercise(m, strike, Side::Buyer, &disc),
    );
    let (market, buyer) = (market?, buyer?);
    let purchase = american_purchase(m, &disc, &market.price, &buyer.price)?;
    let mut stats = market.stats.clone();
    stats.merge(&buyer.stats);
    stats.merge(&purchase.stats);
    let points: Vec<Value> = spots(c, strike)
        .into_iter()
        .map(|s| {
            json!({
                "s": s,
                "market_price": market.price.at_start(s),
                "buyer_price": buyer.price.at_start(s),
                "price_spread": purchase.spread.at_start(s),
                "timing_value": purchase.value.at_start(s),
                "delay_premium": purchase.premium.at_start(s),
            })
        })
        .collect();
    let results = json!({
        "points": points,
        "purchase_region": region_json(&purchase.purchase_region),
        "market_exercise_region": region_json(&market.exercise_region),
        "buyer_exercise_region": region_json(&buyer.exercise_region),
        "purchase_boundary_at_start": purchase.boundary[0],
        "market_exercise_boundary_at_start": market.boundary[0],
        "buyer_exercise_boundary_at_start": buyer.boundary[0],
    });
    let times = disc.grid.t();
    let columns = [
        BoundaryColumn {
            name: "s_star",
            values: &purchase.boundary,
        },
        BoundaryColumn {
            name: "b_market",
            values: &market.boundary,
        },
        BoundaryColumn {
            name: "b_buyer",
            values: &buyer.boundary,
        },
    ];
    if c.output.csv() {
        write_boundary_csv(&dir.join("boundary.csv"), times, &columns)?;
    }
    if c.output.json() {
        write_json(
            &dir.join("boundary.json"),
            &json!({"t": times, "s_star": purchase.boundary, "b_market": market.boundary, "b_buyer": buyer.boundary}),
        )?;
    }
    if c.output.emit_surfaces && c.output.csv() {
        for s in [
            &market.price,
            &buyer.price,
            &purchase.spread,
            &purchase.value,
            &purchase.premium,
        ] {
            surface_file(dir, s)?;
        }
    }
    Ok((results, Some(stats)))
}

fn run_perpetual(c: &ScenarioConfig<PerpetualParams>, dir: &Path) -> Outcome {
    let p = &c.model;
    let market = perpetual_put(p, Side::Market)?;
    let buyer = perpetual_put(p, Side::Buyer)?;
    let th = purchase_threshold(p)?;
    let points: Vec<Value> = spots(c, p.strike)
        .into_iter()
        .map(|s| {
            json!({
                "s": s,
                "market_price": market.value(s),
                "buyer_price": buyer.value(s),
                "timing_value": timing_value(&th, s),
            })
        })
        .collect();
    let results = json!({
        "b_star": market.threshold,
        "b_tilde_star": buyer.threshold,
        "theta_market": market.theta,
        "theta_buyer": buyer.theta,
        "s_star": th.s_star,
        "A": th.slope,
        "limit": th.limit(),
        "points": points,
    });
    let star = [Some(th.s_star)];
    let (b, bt) = ([Some(market.threshold)], [Some(buyer.threshold)]);
    if c.output.csv() {
        write_boundary_csv(
            &dir.join("boundary.csv"),
            &[0.0],
            &[
                BoundaryColumn {
                    name: "s_star",
                    values: &star,
                },
                BoundaryColumn {
                    name: "b_market",
                    values: &b,
                },
                BoundaryColumn {
                    name: "b_buyer",
                    values: &bt,
                },
            ],
        )?;
    }
    if c.output.json() {
        write_json(
            &dir.join("boundary.json"),
            &json!({"s_star": th.s_star, "b_market": b[0], "b_buyer": bt[0]}),
        )?;
    }
    if c.output.csv() {
        let m = c.grid.m.unwrap_or(1000);
        let s_max = c.grid.s_max.unwrap_or(4.0 * p.strike);
        let path = dir.join("timing_value.csv");
        let mut w = csv::Writer::from_path(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let io = |e: csv::Error| Error::Io(format!("{}: {e}", path.display()));
        w.write_record(["s", "spread", "J_hat"]).map_err(io)?;
        for i in 0..=m {
            let s = s_max * i as f64 / m as f64;
            let spread = buyer.value(s) - market.value(s);
            w.write_record([s.to_string(), spread.to_string(), timing_value(&th, s).to_string()])
                .map_err(io)?;
        }
        w.flush().map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    }
    Ok((results, None))
}

fn region_2d_json(region: &Region2D) -> Value {
    json!({"nodes": region.total_count(), "empty": region.is_empty()})
}

fn run_stochvol(c: &ScenarioConfig<SVModel>, dir: &Path) -> Outcome {
    let m = &c.model;
    let payoff = payoff(c)?;
    let disc = c.sv_numerics().map_err(config_err)?.build(m, payoff.scale())?;
    let a = analyze_sv(m, payoff, &disc)?;
    let ys = if c.y_points.is_empty() {
        vec![m.long_run]
    } else {
        c.y_points.clone()
    };
    let mut points = Vec::new();
    for s in spots(c, payoff.scale()) {
        for &y in &ys {
            let at = |u: &Surface2D| u.at(0, s, y);
            points.push(json!({
                "s": s,
                "y": y,
                "market_price": at(&a.market),
                "buyer_price": at(&a.buyer),
                "min_cost": at(&a.cost.value),
                "delay_premium": at(&a.premium.value),
                "delay_premium_from_cost": at(&a.market) - at(&a.cost.value),
            }));
        }
    }
    let consistency = a.premium_from_cost()?.max_abs_diff(&a.premium.value)?;
    let results = json!({
        "points": points,
        "buy_region": region_2d_json(&a.cost.region),
        "premium_zero_region": region_2d_json(&a.premium.region),
        "max_abs_premium_minus_cost_gap": consistency,
    });
    if c.output.csv() {
        write_boundary_2d_csv(&dir.join("boundary.csv"), disc.grid.t(), &a.cost.region)?;
    }
    if c.output.emit_surfaces && c.output.csv() {
        for s in [&a.market, &a.buyer, &a.drift, &a.cost.value, &a.premium.value] {
            surface_2d_file(dir, s)?;
        }
    }
    Ok((results, Some(a.stats)))
}

fn run_rolling(c: &ScenarioConfig<DefaultableModel>, dir: &Path) -> Outcome {
    let m = &c.model;
    let roll_cfg = c
        .roll
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("roll block missing".into()))?;
    let roll = RollSpec {
        long_maturity: roll_cfg.long_maturity,
        short_maturity: roll_cfg.short_maturity,
        payoff: payoff(c)?.clone(),
    };
    let out = rolling_value(m, &roll, &c.numerics().map_err(config_err)?)?;
    let (start, end) = roll.window();
    let in_window: Vec<usize> = (0..out.premium.grid.nt())
        .filter(|&k| out.premium.grid.t()[k] >= start - 1e-12)
        .collect();
    let premium_max = in_window
        .iter()
        .flat_map(|&k| out.premium.values[k].iter())
        .fold(0.0_f64, |a, &b| a.max(b.abs()));
    let points: Vec<Value> = spots(c, roll.payoff.scale())
        .into_iter()
        .map(|s| {
            json!({
                "s": s,
                "long_leg": out.long_leg.at_start(s),
                "short_leg": out.short_leg.at_start(s),
                "rolling_cost": out.cost.at_start(s),
                "min_rolling_cost": out.value.at_start(s),
            })
        })
        .collect();
    let results = json!({
        "window": [start, end],
        "points": points,
        "roll_region": region_json(&out.region),
        "max_abs_premium_in_window": premium_max,
        "drift_changes_sign": out.source_changes_sign(),
    });
    write_region_boundary(dir, &c.output, &out.region)?;
    if c.output.emit_surfaces && c.output.csv() {
        for s in [
            &out.long_leg,
            &out.short_leg,
            &out.cost,
            &out.value,
            &out.premium,
            &out.source,
        ] {
            surface_file(dir, s)?;
        }
    }
    Ok((results, Some(out.stats)))
}

fn run_buysell(c: &ScenarioConfig<DefaultableModel>, dir: &Path) -> Outcome {
    let m = &c.model;
    let payoff = payoff(c)?;
    let disc = c.numerics().map_err(config_err)?.build(m.maturity, payoff.scale())?;
    let out = buy_sell(m, payoff, &disc)?;
    let points: Vec<Value> = spots(c, payoff.scale())
        .into_iter()
        .map(|s| {
            json!({
                "s": s,
                "market_price": out.market.at_start(s),
                "buyer_price": out.buyer.at_start(s),
                "sale_value": out.resale.at_start(s),
                "two_stage_value": out.value.at_start(s),
            })
        })
        .collect();
    let results = json!({
        "points": points,
        "buy_region": region_json(&out.buy_region),
        "sell_region": region_json(&out.sell_region),
    });
    let nt = disc.grid.nt();
    let buy: Vec<Option<f64>> = (0..nt).map(|k| out.buy_region.upper_crossing(k)).collect();
    let sell: Vec<Option<f64>> = (0..nt).map(|k| out.sell_region.lower_crossing(k)).collect();
    let times = disc.grid.t();
    if c.output.csv() {
        write_boundary_csv(
            &dir.join("boundary.csv"),
            times,
            &[
                BoundaryColumn {
                    name: "s_buy",
                    values: &buy,
                },
                BoundaryColumn {
                    name: "s_sell",
                    values: &sell,
                },
            ],
        )?;
    }
    if c.output.json() {
        write_json(
            &dir.join("boundary.json"),
            &json!({"t": times, "s_buy": buy, "s_sell": sell}),
        )?;
    }
    if c.output.emit_surfaces && c.output.csv() {
        for s in [&out.market, &out.buyer, &out.resale, &out.value] {
            surface_file(dir, s)?;
        }
    }
    Ok((results, Some(out.stats)))
}
