use serde_json::{json, Value};

/// A named, ready-to-run scenario document.
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub config: fn() -> Value,
}

fn fig1(kind: &str) -> Value {
    json!({
        "scenario": "european",
        "model": {
            "r": 0.05, "sigma": 0.2, "maturity": 1.0,
            "market": {"kind": "constant", "lambda": 0.2},
            "buyer": {"kind": "exp_local", "lambda0": 0.2, "decay": 0.5, "reference": 5.0}
        },
        "payoff": {"kind": kind, "strike": 5.0},
        "grid": {"m": 1000, "n": 1000},
        "spots": [3.5, 4.2, 5.0]
    })
}

fn fig1_put() -> Value {
    fig1("put")
}

fn fig1_call() -> Value {
    fig1("call")
}

fn fig2_digital() -> Value {
    json!({
        "scenario": "digital",
        "model": {
            "r": 0.05, "sigma": 0.2, "maturity": 1.0,
            "market": {"kind": "constant", "lambda": 0.2},
            "buyer": {"kind": "constant", "lambda": 0.25}
        },
        "payoff": {"kind": "digital_call", "strike": 5.0},
        "grid": {"m": 1000, "n": 1000},
        "spots": [4.2, 5.0, 6.0]
    })
}

fn fig3_perpetual() -> Value {
    json!({
        "scenario": "perpetual",
        "model": {"r": 0.05, "sigma": 0.2, "strike": 5.0, "lambda_market": 0.025, "lambda_buyer": 0.05},
        "spots": [2.0, 3.0, 3.6408, 5.0, 10.0]
    })
}

fn fig4_american() -> Value {
    json!({
        "scenario": "american",
        "model": {
            "r": 0.05, "sigma": 0.2, "maturity": 1.0,
            "market": {"kind": "constant", "lambda": 0.2},
            "buyer": {"kind": "constant", "lambda": 0.25}
        },
        "payoff": {"kind": "put", "strike": 5.0},
        "grid": {"m": 1000, "n": 1000},
        "spots": [3.5, 4.2, 5.0]
    })
}

fn stochvol_demo() -> Value {
    json!({
        "scenario": "stochvol",
        "model": {
            "r": 0.05, "maturity": 1.0, "rho": -0.5,
            "vol": {"kind": "logistic", "sigma_min": 0.1, "sigma_max": 0.4, "center": 0.0, "scale": 0.5},
            "mean_reversion": 2.0, "long_run": 0.0, "vol_of_vol": 0.5, "sharpe": 0.0,
            "market_premium": {"kind": "constant", "phi": 0.0},
            "buyer_premium": {"kind": "tanh", "level": 0.0, "amplitude": 0.3, "center": 0.0, "scale": 0.3}
        },
        "payoff": {"kind": "put", "strike": 5.0},
        "solver": {"scheme": "implicit"},
        "spots": [4.2, 5.0],
        "y_points": [-0.5, 0.0, 0.5]
    })
}

fn rolling_demo() -> Value {
    json!({
        "scenario": "rolling",
        "model": {
            "r": 0.05, "sigma": 0.2, "maturity": 5.0,
            "market": {"kind": "constant", "lambda": 0.2},
            "buyer": {"kind": "constant", "lambda": 0.25}
        },
        "payoff": {"kind": "put", "strike": 5.0},
        "roll": {"long_maturity": 5.0, "short_maturity": 3.0},
        "grid": {"m": 500, "n": 900},
        "spots": [4.2, 5.0]
    })
}

fn buysell_demo() -> Value {
    json!({
        "scenario": "buysell",
        "model": {
            "r": 0.05, "sigma": 0.2, "maturity": 1.0,
            "market": {"kind": "constant", "lambda": 0.2},
            "buyer": {"kind": "exp_local", "lambda0": 0.2, "decay": 0.2, "reference": 5.0}
        },
        "payoff": {"kind": "put", "strike": 5.0},
        "grid": {"m": 1000, "n": 1000},
        "spots": [3.5, 4.2, 5.0]
    })
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "fig1-put",
        description: "European put, constant market intensity, buyer intensity decaying in s",
        config: fig1_put,
    },
    Preset {
        name: "fig1-call",
        description: "European call with the fig1-put intensities",
        config: fig1_call,
    },
    Preset {
        name: "fig2-digital",
        description: "Digital call with constant intensities 0.2 and 0.25",
        config: fig2_digital,
    },
    Preset {
        name: "fig3-perpetual",
        description: "Perpetual American put: exercise thresholds, purchase threshold, timing value",
        config: fig3_perpetual,
    },
    Preset {
        name: "fig4-american",
        description: "American put: exercise boundaries of both sides and the purchase boundary",
        config: fig4_american,
    },
    Preset {
        name: "stochvol-demo",
        description: "Two-factor volatility model with a buyer premium changing sign in y",
        config: stochvol_demo,
    },
    Preset {
        name: "rolling-demo",
        description: "Rolling a 3-year put into a 5-year put during year 3",
        config: rolling_demo,
    },
    Preset {
        name: "buysell-demo",
        description: "Buy a put and sell it later, buyer intensity decaying in s",
        config: buysell_demo,
    },
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}
