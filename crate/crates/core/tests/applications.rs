use proptest::prelude::*;

use purchase_timing::applications::{buy_sell, rolling_value, RollSpec};
use purchase_timing::defaultable::{analyze, DefaultableModel, IntensitySpec, Numerics, PayoffSpec};

const K: f64 = 5.0;

fn model(maturity: f64, market: IntensitySpec, buyer: IntensitySpec) -> DefaultableModel {
    DefaultableModel {
        r: 0.05,
        sigma: 0.2,
        maturity,
        market,
        buyer,
    }
}

fn put() -> PayoffSpec {
    PayoffSpec::Put { strike: K }
}

#[test]
fn local_buyer_buys_low_and_sells_high() {
    let m = model(1.0, IntensitySpec::constant(0.2), IntensitySpec::exp_local(0.2, 0.5, K));
    let d = Numerics::with_size(300, 300).build(1.0, K).unwrap();
    let out = buy_sell(&m, &put(), &d).unwrap();
    for k in 0..d.grid.nt() - 1 {
        let buy = &out.buy_region.intervals[k];
        let sell = &out.sell_region.intervals[k];
        // deep in the money R = P, so a buy node may only touch the sell
        // region where the round trip gains nothing
        for &(b0, b1) in buy {
            for i in b0..=b1 {
                if out.sell_region.contains(k, i) {
                    let gain = out.resale.values[k][i] - out.market.values[k][i];
                    assert!(gain <= 1e-5, "slice {k} node {i}: gain {gain}");
                }
            }
        }
        let (&(_, top_buy), &(high_sell, last)) = (buy.last().unwrap(), sell.last().unwrap());
        assert_eq!(last, d.grid.ns() - 1);
        assert!(top_buy < high_sell && d.grid.s()[high_sell] > K, "slice {k}");
    }
}

#[test]
fn rolling_region_stays_inside_the_window() {
    let roll = RollSpec {
        long_maturity: 2.0,
        short_maturity: 1.5,
        payoff: put(),
    };
    let m = model(2.0, IntensitySpec::constant(0.2), IntensitySpec::exp_local(0.2, 0.5, K));
    let out = rolling_value(&m, &roll, &Numerics::with_size(200, 300)).unwrap();
    let (start, _) = roll.window();
    let t = out.region.times.clone();
    for (k, iv) in out.region.intervals.iter().enumerate() {
        if t[k] < start - 1e-12 {
            assert!(iv.is_empty(), "t = {} is before the window", t[k]);
        } else {
            for (i, &l) in out.premium.values[k].iter().enumerate() {
                assert!(l >= -1e-7, "L_roll({k},{i}) = {l}");
            }
        }
    }
    for (c, (a, b)) in out.cost.values.iter().flatten().zip(
        out.long_leg
            .values
            .iter()
            .flatten()
            .zip(out.short_leg.values.iter().flatten()),
    ) {
        assert!((c - (a - b)).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(3))]

    #[test]
    fn two_stage_value_dominates_its_parts(
        lambda in 0.05f64..0.3,
        buyer0 in 0.05f64..0.3,
        decay in 0.0f64..0.6,
    ) {
        let m = model(1.0, IntensitySpec::constant(lambda), IntensitySpec::exp_local(buyer0, decay, K));
        let d = Numerics::with_size(200, 200).build(1.0, K).unwrap();
        let out = buy_sell(&m, &put(), &d).unwrap();
        let timing = analyze(&m, &put(), &d).unwrap();
        for k in 0..d.grid.nt() {
            for i in 0..d.grid.ns() {
                let (u, r, p) = (out.value.values[k][i], out.resale.values[k][i], out.market.values[k][i]);
                prop_assert!(r >= p - 1e-7);
                prop_assert!(u >= (r - p).max(0.0) - 1e-7, "U {u} < R - P {}", r - p);
                let j = timing.buyer.values[k][i] - timing.cost.value.values[k][i];
                prop_assert!(u >= j - 1e-3, "U {u} < J {j}");
            }
        }
    }
}
