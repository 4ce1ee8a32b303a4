use std::sync::Arc;

use crate::error::{Error, Result};

use super::grid::{Grid1D, Grid2D};

/// A value function sampled on a [`Grid1D`]: `values[k][i]` is the value at
/// `(t[k], s[i])`.
#[derive(Debug, Clone)]
pub struct Surface {
    pub grid: Arc<Grid1D>,
    pub values: Vec<Vec<f64>>,
    pub label: String,
    pub measure: Option<String>,
}

impl Surface {
    pub fn new(grid: Arc<Grid1D>, values: Vec<Vec<f64>>, label: impl Into<String>) -> Result<Self> {
        if values.len() != grid.nt() || values.iter().any(|v| v.len() != grid.ns()) {
            return Err(Error::GridMismatch(format!(
                "surface has {} slices, grid has {}x{}",
                values.len(),
                grid.nt(),
                grid.ns()
            )));
        }
        Ok(Surface {
            grid,
            values,
            label: label.into(),
            measure: None,
        })
    }

    pub fn filled(grid: Arc<Grid1D>, value: f64, label: impl Into<String>) -> Self {
        let values = vec![vec![value; grid.ns()]; grid.nt()];
        Surface {
            grid,
            values,
            label: label.into(),
            measure: None,
        }
    }

    pub fn from_fn(grid: Arc<Grid1D>, label: impl Into<String>, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = grid
            .t()
            .iter()
            .map(|&t| grid.s().iter().map(|&s| f(t, s)).collect())
            .collect();
        Surface {
            grid,
            values,
            label: label.into(),
            measure: None,
        }
    }

    pub fn with_measure(mut self, measure: impl Into<String>) -> Self {
        self.measure = Some(measure.into());
        self
    }

    pub fn relabel(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn same_grid(&self, other: &Surface) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    fn check_same_grid(&self, other: &Surface) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("'{}' vs '{}'", self.label, other.label)))
        }
    }

    /// Node-wise combination of two surfaces on the same grid.
    pub fn zip_with(&self, other: &Surface, label: impl Into<String>, f: impl Fn(f64, f64) -> f64) -> Result<Surface> {
        self.check_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect())
            .collect();
        Ok(Surface {
            grid: self.grid.clone(),
            values,
            label: label.into(),
            measure: None,
        })
    }

    pub fn map(&self, label: impl Into<String>, f: impl Fn(f64) -> f64) -> Surface {
        Surface {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.iter().map(|&x| f(x)).collect()).collect(),
            label: label.into(),
            measure: self.measure.clone(),
        }
    }

    pub fn sub(&self, other: &Surface, label: impl Into<String>) -> Result<Surface> {
        self.zip_with(other, label, |a, b| a - b)
    }

    /// Linear interpolation in `s` on time slice `k`.
    pub fn at(&self, k: usize, s: f64) -> f64 {
        self.grid.interpolate(&self.values[k], s)
    }

    /// Value at `t = grid.t()[0]`, interpolated in `s`.
    pub fn at_start(&self, s: f64) -> f64 {
        self.at(0, s)
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .flat_map(|v| v.iter())
            .fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.values
            .iter()
            .flat_map(|v| v.iter())
            .fold(f64::INFINITY, |m, &x| m.min(x))
    }

    /// `max |self - other|` over all nodes.
    pub fn max_abs_diff(&self, other: &Surface) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max))
    }

    /// Restrict to the first `nt` time slices on a grid with the matching
    /// time axis.
    pub fn truncate_times(&self, grid: Arc<Grid1D>) -> Result<Surface> {
        let nt = grid.nt();
        if grid.s() != self.grid.s() || nt > self.grid.nt() || grid.t() != &self.grid.t()[..nt] {
            return Err(Error::GridMismatch(format!("cannot restrict '{}'", self.label)));
        }
        Ok(Surface {
            grid,
            values: self.values[..nt].to_vec(),
            label: self.label.clone(),
            measure: self.measure.clone(),
        })
    }
}

/// A value function on a [`Grid2D`]: `values[k][j * ns + i]`.
#[derive(Debug, Clone)]
pub struct Surface2D {
    pub grid: Arc<Grid2D>,
    pub values: Vec<Vec<f64>>,
    pub label: String,
    pub measure: Option<String>,
}

impl Surface2D {
    pub fn new(grid: Arc<Grid2D>, values: Vec<Vec<f64>>, label: impl Into<String>) -> Result<Self> {
        if values.len() != grid.nt() || values.iter().any(|v| v.len() != grid.nodes()) {
            return Err(Error::GridMismatch("2-D surface shape does not match grid".into()));
        }
        Ok(Surface2D {
            grid,
            values,
            label: label.into(),
            measure: None,
        })
    }

    pub fn filled(grid: Arc<Grid2D>, value: f64, label: impl Into<String>) -> Self {
        let values = vec![vec![value; grid.nodes()]; grid.nt()];
        Surface2D {
            grid,
            values,
            label: label.into(),
            measure: None,
        }
    }

    pub fn with_measure(mut self, measure: impl Into<String>) -> Self {
        self.measure = Some(measure.into());
        self
    }

    pub fn same_grid(&self, other: &Surface2D) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub fn zip_with(
        &self,
        other: &Surface2D,
        label: impl Into<String>,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Surface2D> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch(format!("'{}' vs '{}'", self.label, other.label)));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect())
            .collect();
        Ok(Surface2D {
            grid: self.grid.clone(),
            values,
            label: label.into(),
            measure: None,
        })
    }

    pub fn sub(&self, other: &Surface2D, label: impl Into<String>) -> Result<Surface2D> {
        self.zip_with(other, label, |a, b| a - b)
    }

    pub fn at(&self, k: usize, s: f64, y: f64) -> f64 {
        self.grid.interpolate(&self.values[k], s, y)
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .flat_map(|v| v.iter())
            .fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Surface2D) -> Result<f64> {
        Ok(self.sub(other, "diff")?.max_abs())
    }

    /// The `s`-line at time slice `k` and y-index `j`.
    pub fn line(&self, k: usize, j: usize) -> &[f64] {
        let ns = self.grid.ns();
        &self.values[k][j * ns..(j + 1) * ns]
    }
}
