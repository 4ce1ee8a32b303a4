use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::grid::Grid1D;
use super::psor::{complementarity_residual, psor_step, ObstacleSense, PsorSettings};
use super::region::{RegionSet, RegionTolerance};
use super::surface::Surface;
use super::tridiag::{thomas_solve, Tridiagonal};

/// Coefficients of the backward equation
/// `u_t + a u_ss + b u_s - c u + j u(t,0) + f = 0` at one node.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NodeCoefficients {
    /// `a`
    pub diffusion: f64,
    /// `b`
    pub drift: f64,
    /// `c`
    pub discount: f64,
    /// `j`: rate of the jump to the absorbing state `s = 0`.
    pub jump: f64,
    /// `f`
    pub source: f64,
}

pub type CoefficientFn<'a> = Box<dyn Fn(f64, f64) -> NodeCoefficients + Send + Sync + 'a>;
pub type BoundaryFn<'a> = Box<dyn Fn(f64) -> f64 + Send + Sync + 'a>;

pub enum UpperBoundary<'a> {
    /// `u_ss = 0` with a one-sided first derivative.
    GammaZero,
    Dirichlet(BoundaryFn<'a>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Implicit,
    #[default]
    CrankNicolson,
}

impl Scheme {
    pub fn theta(self) -> f64 {
        match self {
            Scheme::Implicit => 1.0,
            Scheme::CrankNicolson => 0.5,
        }
    }
}

/// A backward parabolic problem on a [`Grid1D`], optionally constrained by an
/// obstacle. `s = 0` is always a Dirichlet node.
pub struct ObstacleProblem<'a> {
    pub grid: Arc<Grid1D>,
    pub coefficients: CoefficientFn<'a>,
    /// Extra node-wise source added to the coefficient source.
    pub source: Option<&'a [Vec<f64>]>,
    /// Obstacle slices; infinite entries never bind.
    pub obstacle: Option<(&'a [Vec<f64>], ObstacleSense)>,
    pub terminal: Vec<f64>,
    pub lower: BoundaryFn<'a>,
    pub upper: UpperBoundary<'a>,
    pub scheme: Scheme,
    /// Fully implicit steps taken after the terminal slice and after each
    /// restart index when `scheme` is Crank-Nicolson.
    pub rannacher_steps: usize,
    /// Time indices whose slice is treated like a fresh terminal condition.
    pub restarts: Vec<usize>,
    pub psor: PsorSettings,
    pub region_tol: RegionTolerance,
    pub label: String,
}

impl<'a> ObstacleProblem<'a> {
    pub fn new(
        grid: Arc<Grid1D>,
        coefficients: impl Fn(f64, f64) -> NodeCoefficients + Send + Sync + 'a,
        terminal: Vec<f64>,
        lower: impl Fn(f64) -> f64 + Send + Sync + 'a,
    ) -> Self {
        ObstacleProblem {
            grid,
            coefficients: Box::new(coefficients),
            source: None,
            obstacle: None,
            terminal,
            lower: Box::new(lower),
            upper: UpperBoundary::GammaZero,
            scheme: Scheme::CrankNicolson,
            rannacher_steps: 2,
            restarts: Vec::new(),
            psor: PsorSettings::default(),
            region_tol: RegionTolerance::default(),
            label: String::from("u"),
        }
    }

    pub fn with_obstacle(mut self, obstacle: &'a [Vec<f64>], sense: ObstacleSense) -> Self {
        self.obstacle = Some((obstacle, sense));
        self
    }

    pub fn with_source(mut self, source: &'a [Vec<f64>]) -> Self {
        self.source = Some(source);
        self
    }

    pub fn with_upper(mut self, upper: UpperBoundary<'a>) -> Self {
        self.upper = upper;
        self
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_psor(mut self, psor: PsorSettings) -> Self {
        self.psor = psor;
        self
    }

    pub fn with_region_tol(mut self, tol: RegionTolerance) -> Self {
        self.region_tol = tol;
        self
    }

    pub fn with_restarts(mut self, restarts: Vec<usize>) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (ns, nt) = (self.grid.ns(), self.grid.nt());
        if self.terminal.len() != ns {
            return Err(Error::GridMismatch(format!(
                "terminal slice has {} nodes, grid has {ns}",
                self.terminal.len()
            )));
        }
        if self.terminal.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("terminal slice has non-finite values".into()));
        }
        let shape_ok = |x: &[Vec<f64>]| x.len() == nt && x.iter().all(|v| v.len() == ns);
        if let Some(src) = self.source {
            if !shape_ok(src) {
                return Err(Error::GridMismatch("source surface does not match grid".into()));
            }
        }
        if let Some((obs, sense)) = self.obstacle {
            if !shape_ok(obs) {
                return Err(Error::GridMismatch("obstacle surface does not match grid".into()));
            }
            let last = &obs[nt - 1];
            for (i, (&u, &o)) in self.terminal.iter().zip(last).enumerate() {
                let slack = self.region_tol.bound(o);
                let bad = match sense {
                    ObstacleSense::Floor => u < o - slack,
                    ObstacleSense::Ceiling => u > o + slack,
                };
                if bad {
                    return Err(Error::InvalidParameter(format!(
                        "terminal value {u} at node {i} violates the {sense:?} obstacle {o}"
                    )));
                }
            }
        }
        self.psor.validate()
    }

    fn theta_for_step(&self, k: usize) -> f64 {
        // step k moves from t[k] to t[k-1]
        if self.scheme == Scheme::Implicit {
            return 1.0;
        }
        let last = self.grid.nt() - 1;
        let near = |start: usize| start >= k && start - k < self.rannacher_steps;
        if near(last) || self.restarts.iter().any(|&r| near(r)) {
            1.0
        } else {
            0.5
        }
    }
}

/// Spatial operator `W` and forcing at one time node. Row 0 (and the last row
/// under a Dirichlet upper edge) is zero.
struct NodeOperator {
    band: Tridiagonal,
    forcing: Vec<f64>,
}

fn spatial_operator(p: &ObstacleProblem<'_>, k: usize) -> NodeOperator {
    let s = p.grid.s();
    let t = p.grid.t()[k];
    let n = s.len();
    let mut band = Tridiagonal::zeros(n);
    let mut forcing = vec![0.0; n];
    let g0 = (p.lower)(t);
    let last = match p.upper {
        UpperBoundary::GammaZero => n,
        UpperBoundary::Dirichlet(_) => n - 1,
    };
    for i in 1..last {
        let co = (p.coefficients)(t, s[i]);
        forcing[i] = co.jump * g0 + co.source + p.source.map_or(0.0, |src| src[k][i]);
        if i == n - 1 {
            let h = s[i] - s[i - 1];
            band.lower[i] = -co.drift / h;
            band.diag[i] = co.drift / h - co.discount;
            continue;
        }
        let (hm, hp) = (s[i] - s[i - 1], s[i + 1] - s[i]);
        let (a, b) = (co.diffusion, co.drift);
        let mut lo = 2.0 * a / (hm * (hm + hp));
        let mut up = 2.0 * a / (hp * (hm + hp));
        let mut di = -2.0 * a / (hm * hp) - co.discount;
        if 2.0 * a >= b * hp && 2.0 * a >= -b * hm {
            lo -= b * hp / (hm * (hm + hp));
            up += b * hm / (hp * (hm + hp));
            di += b * (hp - hm) / (hm * hp);
        } else if b > 0.0 {
            up += b / hp;
            di -= b / hp;
        } else {
            lo -= b / hm;
            di += b / hm;
        }
        band.lower[i] = lo;
        band.diag[i] = di;
        band.upper[i] = up;
    }
    NodeOperator { band, forcing }
}

/// Linear system of one backward step from `t[k]` to `t[k-1]`.
#[derive(Debug, Clone)]
pub struct StepSystem {
    pub matrix: Tridiagonal,
    pub rhs: Vec<f64>,
    /// Rows that are not strictly diagonally dominant.
    pub non_dominant: Vec<usize>,
}

fn assemble_from(
    p: &ObstacleProblem<'_>,
    k: usize,
    theta: f64,
    later: &[f64],
    op_later: &NodeOperator,
    op_now: &NodeOperator,
) -> StepSystem {
    let t = p.grid.t();
    let n = p.grid.ns();
    let dt = t[k] - t[k - 1];
    let mut matrix = Tridiagonal::zeros(n);
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        matrix.lower[i] = -theta * op_now.band.lower[i];
        matrix.diag[i] = 1.0 / dt - theta * op_now.band.diag[i];
        matrix.upper[i] = -theta * op_now.band.upper[i];
        let explicit = if theta < 1.0 {
            (1.0 - theta) * (op_later.band.row_dot(i, later) + op_later.forcing[i])
        } else {
            0.0
        };
        rhs[i] = later[i] / dt + explicit + theta * op_now.forcing[i];
    }
    matrix.set_identity_row(0);
    rhs[0] = (p.lower)(t[k - 1]);
    if let UpperBoundary::Dirichlet(g) = &p.upper {
        matrix.set_identity_row(n - 1);
        rhs[n - 1] = g(t[k - 1]);
    }
    let non_dominant = matrix.non_dominant_rows();
    StepSystem {
        matrix,
        rhs,
        non_dominant,
    }
}

/// Assemble the step from `t[k]` (values `later`) to `t[k-1]`.
pub fn assemble_step(p: &ObstacleProblem<'_>, k: usize, scheme: Scheme, later: &[f64]) -> Result<StepSystem> {
    if k == 0 || k >= p.grid.nt() {
        return Err(Error::InvalidParameter(format!(
            "time index {k} outside (0, {}]",
            p.grid.nt() - 1
        )));
    }
    if later.len() != p.grid.ns() {
        return Err(Error::GridMismatch("later slice length".into()));
    }
    let op_later = spatial_operator(p, k);
    let op_now = spatial_operator(p, k - 1);
    Ok(assemble_from(p, k, scheme.theta(), later, &op_later, &op_now))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub steps: usize,
    pub psor_iterations: usize,
    /// Largest complementarity (or linear) residual over all steps.
    pub max_residual: f64,
    /// Steps whose system had a non-dominant row.
    pub non_dominant_steps: usize,
}

impl SolveStats {
    pub fn merge(&mut self, other: &SolveStats) {
        self.steps += other.steps;
        self.psor_iterations += other.psor_iterations;
        self.max_residual = self.max_residual.max(other.max_residual);
        self.non_dominant_steps += other.non_dominant_steps;
    }
}

#[derive(Debug, Clone)]
pub struct MarchOutput {
    pub surface: Surface,
    /// Nodes where the obstacle binds (empty without an obstacle).
    pub region: RegionSet,
    pub stats: SolveStats,
}

fn region_gaps(u: &[f64], obstacle: Option<&[f64]>, tol: &RegionTolerance) -> Vec<f64> {
    match obstacle {
        None => vec![f64::INFINITY; u.len()],
        Some(o) => u
            .iter()
            .zip(o)
            .map(|(&v, &w)| {
                if w.is_finite() {
                    (v - w).abs() - tol.bound(w)
                } else {
                    f64::INFINITY
                }
            })
            .collect(),
    }
}

/// Backward time march from the terminal slice to `t[0]`.
pub fn march(p: &ObstacleProblem<'_>) -> Result<MarchOutput> {
    p.validate()?;
    let (ns, nt) = (p.grid.ns(), p.grid.nt());
    let mut values = vec![Vec::new(); nt];
    let mut gaps = vec![Vec::new(); nt];
    let mut stats = SolveStats::default();
    let obstacle_at = |k: usize| p.obstacle.map(|(o, _)| o[k].as_slice());

    let mut terminal = p.terminal.clone();
    terminal[0] = (p.lower)(p.grid.t_end());
    if let UpperBoundary::Dirichlet(g) = &p.upper {
        terminal[ns - 1] = g(p.grid.t_end());
    }
    gaps[nt - 1] = region_gaps(&terminal, obstacle_at(nt - 1), &p.region_tol);
    values[nt - 1] = terminal;

    let mut op_later = spatial_operator(p, nt - 1);
    for k in (1..nt).rev() {
        let op_now = spatial_operator(p, k - 1);
        let theta = p.theta_for_step(k);
        let sys = assemble_from(p, k, theta, &values[k], &op_later, &op_now);
        if !sys.non_dominant.is_empty() {
            if stats.non_dominant_steps == 0 {
                log::warn!(
                    "{}: step {k} has {} non-dominant rows (first {}); consider a smaller time step",
                    p.label,
                    sys.non_dominant.len(),
                    sys.non_dominant[0]
                );
            }
            stats.non_dominant_steps += 1;
        }
        let binding = p.obstacle.and_then(|(o, sense)| {
            let mut slice = o[k - 1].clone();
            slice[0] = sense.inactive();
            if matches!(p.upper, UpperBoundary::Dirichlet(_)) {
                slice[ns - 1] = sense.inactive();
            }
            slice.iter().any(|v| v.is_finite()).then_some((slice, sense))
        });
        let next = match binding {
            Some((slice, sense)) => {
                let out = psor_step(&sys.matrix, &sys.rhs, &slice, sense, &p.psor, None)?;
                stats.psor_iterations += out.iterations;
                stats.max_residual = stats.max_residual.max(out.residual);
                out.values
            }
            None => {
                let u = thomas_solve(&sys.matrix, &sys.rhs)?;
                let free = vec![f64::NEG_INFINITY; ns];
                let r = complementarity_residual(&sys.matrix, &sys.rhs, &u, &free, ObstacleSense::Floor);
                stats.max_residual = stats.max_residual.max(r);
                u
            }
        };
        gaps[k - 1] = region_gaps(&next, obstacle_at(k - 1), &p.region_tol);
        values[k - 1] = next;
        stats.steps += 1;
        op_later = op_now;
    }
    let region = RegionSet::from_gaps(p.grid.t(), p.grid.s(), &gaps);
    let surface = Surface::new(p.grid.clone(), values, p.label.clone())?;
    Ok(MarchOutput { surface, region, stats })
}
