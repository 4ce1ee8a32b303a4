use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Space-time grid for one-factor problems. `s[0] == 0` is the absorbing
/// default state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    s: Vec<f64>,
    t: Vec<f64>,
}

fn check_axis(name: &str, xs: &[f64], min_len: usize) -> Result<()> {
    if xs.len() < min_len {
        return Err(Error::InvalidGrid(format!(
            "{name} axis needs at least {min_len} nodes, got {}",
            xs.len()
        )));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidGrid(format!("{name} axis has non-finite nodes")));
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid(format!("{name} axis is not strictly increasing")));
    }
    Ok(())
}

fn linspace(lo: f64, hi: f64, intervals: usize) -> Vec<f64> {
    let h = (hi - lo) / intervals as f64;
    let mut v: Vec<f64> = (0..=intervals).map(|i| lo + i as f64 * h).collect();
    v[intervals] = hi;
    v
}

impl Grid1D {
    pub fn new(s: Vec<f64>, t: Vec<f64>) -> Result<Self> {
        check_axis("s", &s, 3)?;
        check_axis("t", &t, 2)?;
        if s[0] != 0.0 {
            return Err(Error::InvalidGrid(format!("s axis must start at 0, got {}", s[0])));
        }
        Ok(Grid1D { s, t })
    }

    /// `m` space intervals on `[0, s_max]`, `n` time intervals on `[0, t_end]`.
    pub fn uniform(s_max: f64, m: usize, t_end: f64, n: usize) -> Result<Self> {
        if !(s_max > 0.0) || !(t_end > 0.0) || m < 2 || n < 1 {
            return Err(Error::InvalidGrid(format!(
                "uniform grid needs s_max>0, t_end>0, m>=2, n>=1 (got {s_max}, {t_end}, {m}, {n})"
            )));
        }
        Grid1D::new(linspace(0.0, s_max, m), linspace(0.0, t_end, n))
    }

    /// Same space axis, different time axis.
    pub fn with_times(&self, t: Vec<f64>) -> Result<Self> {
        Grid1D::new(self.s.clone(), t)
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn ns(&self) -> usize {
        self.s.len()
    }

    pub fn nt(&self) -> usize {
        self.t.len()
    }

    pub fn s_max(&self) -> f64 {
        self.s[self.s.len() - 1]
    }

    pub fn t_end(&self) -> f64 {
        self.t[self.t.len() - 1]
    }

    /// Index of the node closest to `s`.
    pub fn nearest_s(&self, s: f64) -> usize {
        nearest(&self.s, s)
    }

    pub fn nearest_t(&self, t: f64) -> usize {
        nearest(&self.t, t)
    }

    /// Largest local spacing of the space axis around `s`.
    pub fn cell_width_at(&self, s: f64) -> f64 {
        let i = self.nearest_s(s);
        let left = if i > 0 { self.s[i] - self.s[i - 1] } else { 0.0 };
        let right = if i + 1 < self.s.len() {
            self.s[i + 1] - self.s[i]
        } else {
            0.0
        };
        left.max(right)
    }

    /// Piecewise-linear interpolation of a space slice at `s`.
    pub fn interpolate(&self, slice: &[f64], s: f64) -> f64 {
        interp(&self.s, slice, s)
    }

    pub fn is_uniform_in_s(&self) -> bool {
        is_uniform(&self.s)
    }
}

pub(crate) fn is_uniform(xs: &[f64]) -> bool {
    let h = xs[1] - xs[0];
    xs.windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-12 * h.abs().max(1.0))
}

pub(crate) fn nearest(xs: &[f64], x: f64) -> usize {
    match xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
        Ok(i) => i,
        Err(0) => 0,
        Err(i) if i >= xs.len() => xs.len() - 1,
        Err(i) => {
            if x - xs[i - 1] <= xs[i] - x {
                i - 1
            } else {
                i
            }
        }
    }
}

pub(crate) fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let i = match xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
        Ok(i) => return ys[i],
        Err(i) => i,
    };
    let w = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    ys[i - 1] + w * (ys[i] - ys[i - 1])
}

/// Space-time grid for the two-factor `(s, y)` problems. Values on a time
/// slice are stored with `s` varying fastest: `index = j * ns + i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    s: Vec<f64>,
    y: Vec<f64>,
    t: Vec<f64>,
}

impl Grid2D {
    pub fn new(s: Vec<f64>, y: Vec<f64>, t: Vec<f64>) -> Result<Self> {
        check_axis("s", &s, 3)?;
        check_axis("y", &y, 3)?;
        check_axis("t", &t, 2)?;
        if s[0] < 0.0 {
            return Err(Error::InvalidGrid("s axis must be non-negative".into()));
        }
        Ok(Grid2D { s, y, t })
    }

    pub fn uniform(s_max: f64, m: usize, y_range: (f64, f64), my: usize, t_end: f64, n: usize) -> Result<Self> {
        if !(s_max > 0.0) || !(t_end > 0.0) || !(y_range.1 > y_range.0) || m < 2 || my < 2 || n < 1 {
            return Err(Error::InvalidGrid("degenerate uniform 2-D grid".into()));
        }
        Grid2D::new(
            linspace(0.0, s_max, m),
            linspace(y_range.0, y_range.1, my),
            linspace(0.0, t_end, n),
        )
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn ns(&self) -> usize {
        self.s.len()
    }

    pub fn ny(&self) -> usize {
        self.y.len()
    }

    pub fn nt(&self) -> usize {
        self.t.len()
    }

    pub fn nodes(&self) -> usize {
        self.s.len() * self.y.len()
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.s.len() + i
    }

    /// The one-factor grid sharing this grid's `s` and `t` axes (requires
    /// `s[0] == 0`).
    pub fn s_grid(&self) -> Result<Grid1D> {
        Grid1D::new(self.s.clone(), self.t.clone())
    }

    /// Bilinear interpolation of a slice at `(s, y)`.
    pub fn interpolate(&self, slice: &[f64], s: f64, y: f64) -> f64 {
        let ns = self.ns();
        let col: Vec<f64> = (0..self.ny())
            .map(|j| interp(&self.s, &slice[j * ns..(j + 1) * ns], s))
            .collect();
        interp(&self.y, &col, y)
    }
}
