//! Scalar special functions, Black-Scholes closed forms and bracketing root
//! finding.
//!
//! The Gaussian cdf is evaluated from `exp` only: a Taylor series around zero
//! for `|x| <= 3` and a continued fraction for the Mills ratio in the tails.
//! Both branches are accurate to a few ulps of 0.5, well inside the 1e-12
//! absolute budget used throughout the crate.

use crate::error::{Error, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Switch point between the series and the continued-fraction branch.
const SERIES_LIMIT: f64 = 3.0;

/// Standard Gaussian density.
pub fn norm_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard Gaussian cumulative distribution function.
pub fn norm_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x >= 0.0 {
        if x <= SERIES_LIMIT {
            cdf_series(x)
        } else {
            1.0 - lower_tail(-x)
        }
    } else if x >= -SERIES_LIMIT {
        cdf_series(x)
    } else {
        lower_tail(x)
    }
}

// 0.5 + pdf(x) * (x + x^3/3 + x^5/15 + ...)
fn cdf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut k = 1.0;
    loop {
        k += 2.0;
        term *= x2 / k;
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    (0.5 + norm_pdf(x) * sum).clamp(0.0, 1.0)
}

// Phi(x) for x < -3 via the Mills ratio continued fraction
// R(z) = 1/(z + 1/(z + 2/(z + 3/(z + ...)))), evaluated by modified Lentz.
fn lower_tail(x: f64) -> f64 {
    let z = -x;
    if z > 40.0 {
        return 0.0;
    }
    const TINY: f64 = 1e-300;
    let mut f = z;
    let mut c = z;
    let mut d = 0.0;
    for n in 1..500 {
        let a = n as f64;
        d = z + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = z + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    norm_pdf(z) / f
}

/// Inputs of a Black-Scholes type closed form. `rate` is the discount and
/// drift rate; for the defaultable model it is `r + lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsParams {
    pub spot: f64,
    pub strike: f64,
    pub rate: f64,
    pub vol: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsKind {
    Call,
    Put,
    DigitalCall,
}

impl BsParams {
    pub fn new(spot: f64, strike: f64, rate: f64, vol: f64, tau: f64) -> Result<Self> {
        let p = BsParams {
            spot,
            strike,
            rate,
            vol,
            tau,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spot > 0.0 && self.spot.is_finite()) {
            return Err(Error::InvalidParameter(format!("spot must be > 0, got {}", self.spot)));
        }
        if !(self.strike > 0.0 && self.strike.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "strike must be > 0, got {}",
                self.strike
            )));
        }
        if !(self.vol > 0.0 && self.vol.is_finite()) {
            return Err(Error::InvalidParameter(format!("vol must be > 0, got {}", self.vol)));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau must be >= 0, got {}", self.tau)));
        }
        if !self.rate.is_finite() {
            return Err(Error::InvalidParameter("rate must be finite".into()));
        }
        Ok(())
    }

    /// `(d1, d2)`; only meaningful for `tau > 0`.
    pub fn d1_d2(&self) -> (f64, f64) {
        let sd = self.vol * self.tau.sqrt();
        let d1 = ((self.spot / self.strike).ln() + (self.rate + 0.5 * self.vol * self.vol) * self.tau) / sd;
        (d1, d1 - sd)
    }
}

/// Black-Scholes price with `p.rate` as both drift and discount rate.
pub fn bs_price(p: &BsParams, kind: BsKind) -> Result<f64> {
    p.validate()?;
    if p.tau == 0.0 {
        return Ok(match kind {
            BsKind::Call => (p.spot - p.strike).max(0.0),
            BsKind::Put => (p.strike - p.spot).max(0.0),
            BsKind::DigitalCall => {
                if p.spot > p.strike {
                    1.0
                } else {
                    0.0
                }
            }
        });
    }
    let (d1, d2) = p.d1_d2();
    let df = (-p.rate * p.tau).exp();
    let v = match kind {
        BsKind::Call => p.spot * norm_cdf(d1) - p.strike * df * norm_cdf(d2),
        BsKind::Put => p.strike * df * norm_cdf(-d2) - p.spot * norm_cdf(-d1),
        BsKind::DigitalCall => df * norm_cdf(d2),
    };
    Ok(v.max(0.0))
}

const BRENT_MAX_ITER: usize = 200;

/// Brent's bracketing root finder. Requires `f(lo) * f(hi) <= 0`; returns a
/// point whose bracket has width at most `tol` (or an exact zero).
pub fn brent_root<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(Error::NoBracket { lo, hi });
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..BRENT_MAX_ITER {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
    }
    Err(Error::MaxIter {
        iterations: BRENT_MAX_ITER,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_reference_values() {
        // mpmath ncdf at 30 digits
        let cases = [
            (0.0, 0.5),
            (1.15, 0.874_928_064_362_849_7),
            (-1.15, 0.125_071_935_637_150_28),
            (2.5, 0.993_790_334_674_224),
            (-4.0, 3.167_124_183_311_992_1e-5),
            (-7.5, 3.190_891_672_910_896e-14),
            (3.2, 0.999_312_862_062_084),
        ];
        for (x, want) in cases {
            assert!((norm_cdf(x) - want).abs() < 1e-14, "x={x}: {} vs {want}", norm_cdf(x));
        }
        assert!((norm_cdf(10.0) - 1.0).abs() < 1e-12);
        assert_eq!(norm_cdf(-50.0), 0.0);
    }

    #[test]
    fn expiry_payoff_branch() {
        let p = BsParams::new(6.0, 5.0, 0.1, 0.2, 0.0).unwrap();
        assert_eq!(bs_price(&p, BsKind::Call).unwrap(), 1.0);
        assert_eq!(bs_price(&p, BsKind::Put).unwrap(), 0.0);
        assert_eq!(bs_price(&p, BsKind::DigitalCall).unwrap(), 1.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(BsParams::new(5.0, 5.0, 0.1, 0.2, -1.0).is_err());
        assert!(BsParams::new(5.0, 5.0, 0.1, 0.0, 1.0).is_err());
        let p = BsParams {
            spot: 5.0,
            strike: 5.0,
            rate: 0.0,
            vol: -0.1,
            tau: 1.0,
        };
        assert!(bs_price(&p, BsKind::Call).is_err());
    }

    #[test]
    fn parity_with_rate_as_discount() {
        let p = BsParams::new(5.0, 5.0, 0.25, 0.2, 1.0).unwrap();
        let c = bs_price(&p, BsKind::Call).unwrap();
        let q = bs_price(&p, BsKind::Put).unwrap();
        assert!((c - q - (5.0 - 5.0 * (-0.25f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn brent_known_roots() {
        let r = brent_root(|x| x * x - 2.0, 1.0, 2.0, 1e-12).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
        let z = brent_root(|x| x, -1.0, 1.0, 1e-12).unwrap();
        assert!(z.abs() < 1e-12);
        assert!(matches!(
            brent_root(|x| x * x + 1.0, -1.0, 1.0, 1e-12),
            Err(Error::NoBracket { .. })
        ));
    }
}
