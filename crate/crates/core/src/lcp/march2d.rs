use std::sync::Arc;

use crate::error::{Error, Result};

use super::grid::Grid2D;
use super::march::SolveStats;
use super::psor::{psor_step, ObstacleSense, PsorSettings};
use super::region::{Region2D, RegionTolerance};
use super::surface::Surface2D;
use super::tridiag::{thomas_solve, Tridiagonal};

/// Coefficients of
/// `u_t + a_ss u_ss + a_yy u_yy + a_sy u_sy + b_s u_s + b_y u_y - c u + f = 0`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NodeCoefficients2D {
    pub ss: f64,
    pub yy: f64,
    pub sy: f64,
    pub s: f64,
    pub y: f64,
    pub discount: f64,
    pub source: f64,
}

pub type CoefficientFn2D<'a> = Box<dyn Fn(f64, f64, f64) -> NodeCoefficients2D + Send + Sync + 'a>;
pub type EdgeFn<'a> = Box<dyn Fn(f64, f64) -> f64 + Send + Sync + 'a>;

/// Two-factor counterpart of [`super::ObstacleProblem`]. The lowest `s` line
/// is Dirichlet; the other edges drop the second derivative normal to them
/// and the cross term.
pub struct ObstacleProblem2D<'a> {
    pub grid: Arc<Grid2D>,
    pub coefficients: CoefficientFn2D<'a>,
    pub source: Option<&'a [Vec<f64>]>,
    pub obstacle: Option<(&'a [Vec<f64>], ObstacleSense)>,
    pub terminal: Vec<f64>,
    /// Value on `s = s[0]` as a function of `(t, y)`.
    pub lower: EdgeFn<'a>,
    pub psor: PsorSettings,
    pub region_tol: RegionTolerance,
    pub label: String,
}

impl<'a> ObstacleProblem2D<'a> {
    pub fn new(
        grid: Arc<Grid2D>,
        coefficients: impl Fn(f64, f64, f64) -> NodeCoefficients2D + Send + Sync + 'a,
        terminal: Vec<f64>,
        lower: impl Fn(f64, f64) -> f64 + Send + Sync + 'a,
    ) -> Self {
        ObstacleProblem2D {
            grid,
            coefficients: Box::new(coefficients),
            source: None,
            obstacle: None,
            terminal,
            lower: Box::new(lower),
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

    pub fn with_psor(mut self, psor: PsorSettings) -> Self {
        self.psor = psor;
        self
    }

    pub fn with_region_tol(mut self, tol: RegionTolerance) -> Self {
        self.region_tol = tol;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    fn validate(&self) -> Result<()> {
        let (nodes, nt) = (self.grid.nodes(), self.grid.nt());
        if self.terminal.len() != nodes || self.terminal.iter().any(|v| !v.is_finite()) {
            return Err(Error::GridMismatch("terminal slice does not match the 2-D grid".into()));
        }
        let shape_ok = |x: &[Vec<f64>]| x.len() == nt && x.iter().all(|v| v.len() == nodes);
        if self.source.is_some_and(|s| !shape_ok(s)) {
            return Err(Error::GridMismatch("source does not match the 2-D grid".into()));
        }
        if let Some((obs, sense)) = self.obstacle {
            if !shape_ok(obs) {
                return Err(Error::GridMismatch("obstacle does not match the 2-D grid".into()));
            }
            for (&u, &o) in self.terminal.iter().zip(&obs[nt - 1]) {
                let slack = self.region_tol.bound(o);
                let bad = match sense {
                    ObstacleSense::Floor => u < o - slack,
                    ObstacleSense::Ceiling => u > o + slack,
                };
                if bad {
                    return Err(Error::InvalidParameter(format!(
                        "terminal value {u} violates the {sense:?} obstacle {o}"
                    )));
                }
            }
        }
        self.psor.validate()
    }
}

/// Stencil offsets `(di, dj)`; index `(dj + 1) * 3 + (di + 1)`.
const CENTER: usize = 4;

#[inline]
fn slot(di: isize, dj: isize) -> usize {
    ((dj + 1) * 3 + (di + 1)) as usize
}

/// Three-point weights for `a u'' + b u'` on a possibly non-uniform axis,
/// upwinding the first derivative when central weights would not be
/// monotone.
fn axis_weights(a: f64, b: f64, hm: f64, hp: f64) -> [f64; 3] {
    let mut w = [
        2.0 * a / (hm * (hm + hp)),
        -2.0 * a / (hm * hp),
        2.0 * a / (hp * (hm + hp)),
    ];
    if 2.0 * a >= b * hp && 2.0 * a >= -b * hm {
        w[0] -= b * hp / (hm * (hm + hp));
        w[1] += b * (hp - hm) / (hm * hp);
        w[2] += b * hm / (hp * (hm + hp));
    } else if b > 0.0 {
        w[1] -= b / hp;
        w[2] += b / hp;
    } else {
        w[0] -= b / hm;
        w[1] += b / hm;
    }
    w
}

/// Implicit system `A u = rhs` of one step, 9 coefficients per node.
struct System2D {
    a: Vec<[f64; 9]>,
    rhs: Vec<f64>,
}

fn assemble(p: &ObstacleProblem2D<'_>, k: usize, later: &[f64]) -> System2D {
    let g = &p.grid;
    let (s, y) = (g.s(), g.y());
    let (ns, ny) = (g.ns(), g.ny());
    let t = g.t()[k - 1];
    let dt = g.t()[k] - t;
    let mut a = vec![[0.0; 9]; g.nodes()];
    let mut rhs = vec![0.0; g.nodes()];
    for j in 0..ny {
        for i in 0..ns {
            let n = g.idx(i, j);
            if i == 0 {
                a[n][CENTER] = 1.0;
                rhs[n] = (p.lower)(t, y[j]);
                continue;
            }
            let co = (p.coefficients)(t, s[i], y[j]);
            let mut w = [0.0; 9];
            w[CENTER] -= co.discount;
            // s direction
            if i == ns - 1 {
                let h = s[i] - s[i - 1];
                w[slot(-1, 0)] -= co.s / h;
                w[CENTER] += co.s / h;
            } else {
                let ws = axis_weights(co.ss, co.s, s[i] - s[i - 1], s[i + 1] - s[i]);
                w[slot(-1, 0)] += ws[0];
                w[CENTER] += ws[1];
                w[slot(1, 0)] += ws[2];
            }
            // y direction
            if j == 0 {
                let h = y[1] - y[0];
                w[CENTER] -= co.y / h;
                w[slot(0, 1)] += co.y / h;
            } else if j == ny - 1 {
                let h = y[j] - y[j - 1];
                w[slot(0, -1)] -= co.y / h;
                w[CENTER] += co.y / h;
            } else {
                let wy = axis_weights(co.yy, co.y, y[j] - y[j - 1], y[j + 1] - y[j]);
                w[slot(0, -1)] += wy[0];
                w[CENTER] += wy[1];
                w[slot(0, 1)] += wy[2];
            }
            // cross term, central, interior only
            if i < ns - 1 && j > 0 && j < ny - 1 && co.sy != 0.0 {
                let c = co.sy / ((s[i + 1] - s[i - 1]) * (y[j + 1] - y[j - 1]));
                w[slot(1, 1)] += c;
                w[slot(-1, -1)] += c;
                w[slot(1, -1)] -= c;
                w[slot(-1, 1)] -= c;
            }
            for (o, wo) in w.iter().enumerate() {
                a[n][o] = -wo;
            }
            a[n][CENTER] += 1.0 / dt;
            rhs[n] = later[n] / dt + co.source + p.source.map_or(0.0, |src| src[k - 1][n]);
        }
    }
    System2D { a, rhs }
}

#[inline]
fn neighbours(ns: usize, ny: usize, i: usize, j: usize) -> impl Iterator<Item = (usize, usize)> {
    (-1isize..=1)
        .flat_map(move |dj| (-1isize..=1).map(move |di| (di, dj)))
        .filter_map(move |(di, dj)| {
            let (ii, jj) = (i as isize + di, j as isize + dj);
            (ii >= 0 && jj >= 0 && (ii as usize) < ns && (jj as usize) < ny && !(di == 0 && dj == 0))
                .then(|| (slot(di, dj), jj as usize * ns + ii as usize))
        })
}

fn row_dot(sys: &System2D, ns: usize, ny: usize, n: usize, u: &[f64]) -> f64 {
    let (i, j) = (n % ns, n / ns);
    sys.a[n][CENTER] * u[n] + neighbours(ns, ny, i, j).map(|(o, m)| sys.a[n][o] * u[m]).sum::<f64>()
}

fn residual(sys: &System2D, ns: usize, ny: usize, u: &[f64], obstacle: &[f64], sense: ObstacleSense) -> f64 {
    (0..u.len())
        .map(|n| {
            let r = (sys.rhs[n] - row_dot(sys, ns, ny, n, u)) / sys.a[n][CENTER];
            let gap = obstacle[n] - u[n];
            match sense {
                ObstacleSense::Floor => r.max(gap).abs(),
                ObstacleSense::Ceiling => r.min(gap).abs(),
            }
        })
        .fold(0.0, f64::max)
}

/// Projected block Gauss-Seidel over `y` lines. Each line is a tridiagonal
/// complementarity problem in `s` with the other lines frozen, solved by
/// [`psor_step`]. Returns the solution, the total inner iterations and the
/// global residual.
#[allow(clippy::needless_range_loop)]
fn block_psor(
    sys: &System2D,
    ns: usize,
    ny: usize,
    obstacle: &[f64],
    sense: ObstacleSense,
    settings: &PsorSettings,
    mut u: Vec<f64>,
) -> Result<(Vec<f64>, usize, f64)> {
    let constrained = obstacle.iter().any(|o| o.is_finite());
    let mut line = Tridiagonal::zeros(ns);
    let mut rhs = vec![0.0; ns];
    let mut res = residual(sys, ns, ny, &u, obstacle, sense);
    let (mut sweeps, mut inner) = (0, 0);
    while res > settings.tol {
        if sweeps == settings.max_iter {
            return Err(Error::MaxIterExceeded {
                iterations: sweeps,
                residual: res,
                last_iterate: u,
            });
        }
        sweeps += 1;
        for j in 0..ny {
            for i in 0..ns {
                let n = j * ns + i;
                let row = &sys.a[n];
                line.lower[i] = row[slot(-1, 0)];
                line.diag[i] = row[CENTER];
                line.upper[i] = row[slot(1, 0)];
                let mut r = sys.rhs[n];
                for dj in [-1isize, 1] {
                    let jj = j as isize + dj;
                    if jj < 0 || jj as usize >= ny {
                        continue;
                    }
                    for di in -1isize..=1 {
                        let ii = i as isize + di;
                        if ii >= 0 && (ii as usize) < ns {
                            r -= row[slot(di, dj)] * u[jj as usize * ns + ii as usize];
                        }
                    }
                }
                rhs[i] = r;
            }
            let range = j * ns..(j + 1) * ns;
            let solved = if constrained {
                let out = psor_step(&line, &rhs, &obstacle[range.clone()], sense, settings, None)?;
                inner += out.iterations;
                out.values
            } else {
                thomas_solve(&line, &rhs)?
            };
            u[range].copy_from_slice(&solved);
        }
        res = residual(sys, ns, ny, &u, obstacle, sense);
    }
    Ok((u, sweeps + inner, res))
}

#[derive(Debug, Clone)]
pub struct MarchOutput2D {
    pub surface: Surface2D,
    pub region: Region2D,
    pub stats: SolveStats,
}

/// Fully implicit backward march with a projected line solver at every step.
pub fn march_2d(p: &ObstacleProblem2D<'_>) -> Result<MarchOutput2D> {
    p.validate()?;
    let g = &p.grid;
    let (ns, ny, nt) = (g.ns(), g.ny(), g.nt());
    let mut values = vec![Vec::new(); nt];
    let mut gaps = vec![Vec::new(); nt];
    let mut stats = SolveStats::default();
    let gap_of = |u: &[f64], k: usize| -> Vec<f64> {
        match p.obstacle {
            None => vec![f64::INFINITY; u.len()],
            Some((o, _)) => u
                .iter()
                .zip(&o[k])
                .map(|(&v, &w)| {
                    if w.is_finite() {
                        (v - w).abs() - p.region_tol.bound(w)
                    } else {
                        f64::INFINITY
                    }
                })
                .collect(),
        }
    };
    let mut terminal = p.terminal.clone();
    for j in 0..ny {
        terminal[g.idx(0, j)] = (p.lower)(g.t()[nt - 1], g.y()[j]);
    }
    gaps[nt - 1] = gap_of(&terminal, nt - 1);
    values[nt - 1] = terminal;
    for k in (1..nt).rev() {
        let sys = assemble(p, k, &values[k]);
        let (obstacle, sense) = match p.obstacle {
            Some((o, sense)) => {
                let mut slice = o[k - 1].clone();
                for j in 0..ny {
                    slice[g.idx(0, j)] = sense.inactive();
                }
                (slice, sense)
            }
            None => (vec![f64::NEG_INFINITY; g.nodes()], ObstacleSense::Floor),
        };
        let (u, iters, res) = block_psor(&sys, ns, ny, &obstacle, sense, &p.psor, values[k].clone())?;
        stats.psor_iterations += iters;
        stats.max_residual = stats.max_residual.max(res);
        stats.steps += 1;
        gaps[k - 1] = gap_of(&u, k - 1);
        values[k - 1] = u;
    }
    let region = Region2D::from_gaps(g.t(), g.s(), g.y(), &gaps);
    let surface = Surface2D::new(g.clone(), values, p.label.clone())?;
    Ok(MarchOutput2D { surface, region, stats })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_operator_keeps_terminal() {
        let g = Arc::new(Grid2D::uniform(4.0, 8, (-1.0, 1.0), 4, 1.0, 3).unwrap());
        let term: Vec<f64> = (0..g.nodes()).map(|n| n as f64 * 0.1).collect();
        let t0 = term[0];
        let p = ObstacleProblem2D::new(
            g.clone(),
            |_, _, _| NodeCoefficients2D::default(),
            term.clone(),
            move |_, _| t0,
        );
        let out = march_2d(&p).unwrap();
        for j in 0..g.ny() {
            for i in 1..g.ns() {
                let n = g.idx(i, j);
                assert!((out.surface.values[0][n] - term[n]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn binding_ceiling_everywhere() {
        let g = Arc::new(Grid2D::uniform(4.0, 8, (-1.0, 1.0), 4, 1.0, 3).unwrap());
        let term = vec![1.0; g.nodes()];
        let obs = vec![term.clone(); g.nt()];
        // positive source pushes the value up into the ceiling
        let p = ObstacleProblem2D::new(
            g.clone(),
            |_, _, _| NodeCoefficients2D {
                source: 1.0,
                ..Default::default()
            },
            term,
            |_, _| 1.0,
        )
        .with_obstacle(&obs, ObstacleSense::Ceiling);
        let out = march_2d(&p).unwrap();
        assert_eq!(out.region.total_count(), (g.ns() - 1) * g.ny() * g.nt());
    }
}
