use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::tridiag::{thomas_solve, Tridiagonal};

/// Side of the obstacle the solution must stay on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObstacleSense {
    /// `value >= obstacle`; supremum (American-type) problems.
    Floor,
    /// `value <= obstacle`; infimum (cost-minimisation) problems.
    Ceiling,
}

impl ObstacleSense {
    #[inline]
    pub fn project(self, value: f64, obstacle: f64) -> f64 {
        match self {
            ObstacleSense::Floor => value.max(obstacle),
            ObstacleSense::Ceiling => value.min(obstacle),
        }
    }

    /// The obstacle value that never binds.
    pub fn inactive(self) -> f64 {
        match self {
            ObstacleSense::Floor => f64::NEG_INFINITY,
            ObstacleSense::Ceiling => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsorSettings {
    pub omega: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PsorSettings {
    fn default() -> Self {
        PsorSettings {
            omega: 1.5,
            tol: 1e-8,
            max_iter: 10_000,
        }
    }
}

impl PsorSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega < 2.0) {
            return Err(Error::InvalidParameter(format!(
                "omega must lie in (0,2), got {}",
                self.omega
            )));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::InvalidParameter("PSOR tol must be > 0 and max_iter >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PsorOutcome {
    pub values: Vec<f64>,
    /// Nodes where the obstacle binds.
    pub active: Vec<bool>,
    pub iterations: usize,
    /// Complementarity residual, see [`complementarity_residual`].
    pub residual: f64,
}

/// Per-node complementarity residual of `min/max(rhs - A u, obstacle - u)`
/// with the equation part scaled by the diagonal. Zero at an exact solution.
pub fn complementarity_residual(
    a: &Tridiagonal,
    rhs: &[f64],
    u: &[f64],
    obstacle: &[f64],
    sense: ObstacleSense,
) -> f64 {
    (0..a.len())
        .map(|i| {
            let r = (rhs[i] - a.row_dot(i, u)) / a.diag[i];
            let gap = obstacle[i] - u[i];
            match sense {
                ObstacleSense::Floor => r.max(gap).abs(),
                ObstacleSense::Ceiling => r.min(gap).abs(),
            }
        })
        .fold(0.0, f64::max)
}

/// Projected SOR for the linear complementarity problem defined by one
/// implicit time step. Starts from `initial` or, when absent, from the
/// projected unconstrained solution.
pub fn psor_step(
    a: &Tridiagonal,
    rhs: &[f64],
    obstacle: &[f64],
    sense: ObstacleSense,
    settings: &PsorSettings,
    initial: Option<&[f64]>,
) -> Result<PsorOutcome> {
    settings.validate()?;
    let n = a.len();
    if rhs.len() != n || obstacle.len() != n {
        return Err(Error::InvalidParameter("PSOR operand lengths differ".into()));
    }
    let mut u: Vec<f64> = match initial {
        Some(x) => x.iter().zip(obstacle).map(|(&v, &o)| sense.project(v, o)).collect(),
        None => thomas_solve(a, rhs)?
            .into_iter()
            .zip(obstacle)
            .map(|(v, &o)| sense.project(v, o))
            .collect(),
    };
    let omega = settings.omega;
    let mut residual = complementarity_residual(a, rhs, &u, obstacle, sense);
    let mut iterations = 0;
    while residual > settings.tol {
        if iterations == settings.max_iter {
            return Err(Error::MaxIterExceeded {
                iterations,
                residual,
                last_iterate: u,
            });
        }
        iterations += 1;
        let mut max_delta = 0.0_f64;
        for i in 0..n {
            let mut sigma = rhs[i];
            if i > 0 {
                sigma -= a.lower[i] * u[i - 1];
            }
            if i + 1 < n {
                sigma -= a.upper[i] * u[i + 1];
            }
            let gs = sigma / a.diag[i];
            let next = sense.project(u[i] + omega * (gs - u[i]), obstacle[i]);
            max_delta = max_delta.max((next - u[i]).abs());
            u[i] = next;
        }
        if max_delta <= settings.tol {
            residual = complementarity_residual(a, rhs, &u, obstacle, sense);
        }
    }
    let active = u
        .iter()
        .zip(obstacle)
        .map(|(&v, &o)| o.is_finite() && (v - o).abs() <= settings.tol)
        .collect();
    Ok(PsorOutcome {
        values: u,
        active,
        iterations,
        residual,
    })
}
