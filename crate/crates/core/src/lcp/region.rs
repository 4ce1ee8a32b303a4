use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::surface::{Surface, Surface2D};

/// Tolerance deciding when a constraint counts as active:
/// `|a - b| <= max(abs, rel * max(1, |b|))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionTolerance {
    pub abs: f64,
    pub rel: f64,
}

impl RegionTolerance {
    /// Default tolerance for a contract with strike `strike`.
    pub fn for_strike(strike: f64) -> Self {
        RegionTolerance {
            abs: 1e-7 * strike,
            rel: 1e-6,
        }
    }

    #[inline]
    pub fn bound(&self, reference: f64) -> f64 {
        self.abs.max(self.rel * reference.abs().max(1.0))
    }
}

impl Default for RegionTolerance {
    fn default() -> Self {
        RegionTolerance::for_strike(1.0)
    }
}

/// Per time step, the sorted disjoint index intervals (inclusive) of `s > 0`
/// nodes where a constraint is active, plus the critical level `s*(t)` when
/// every slice has at most one boundary crossing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSet {
    pub times: Vec<f64>,
    pub s_nodes: Vec<f64>,
    pub intervals: Vec<Vec<(usize, usize)>>,
    /// Interpolated boundary crossings per slice, ascending in `s`.
    pub crossings: Vec<Vec<f64>>,
    pub curve: Option<Vec<Option<f64>>>,
}

impl RegionSet {
    /// Build from signed gaps: node `i` of slice `k` is active when
    /// `gaps[k][i] <= 0`. Node 0 (the absorbing state) is never part of a
    /// region. Crossings are located by linear interpolation of the gap.
    pub fn from_gaps(times: &[f64], s_nodes: &[f64], gaps: &[Vec<f64>]) -> RegionSet {
        let mut intervals = Vec::with_capacity(gaps.len());
        let mut all_crossings = Vec::with_capacity(gaps.len());
        let mut single = true;
        for g in gaps {
            let mut iv = Vec::new();
            let mut start: Option<usize> = None;
            for (i, &gi) in g.iter().enumerate().skip(1) {
                let on = gi <= 0.0;
                match (on, start) {
                    (true, None) => start = Some(i),
                    (false, Some(a)) => {
                        iv.push((a, i - 1));
                        start = None;
                    }
                    _ => {}
                }
            }
            if let Some(a) = start {
                iv.push((a, g.len() - 1));
            }
            let mut crossings = Vec::new();
            for i in 1..g.len() - 1 {
                let (a, b) = (g[i], g[i + 1]);
                if (a <= 0.0) != (b <= 0.0) {
                    let w = if a.is_finite() && b.is_finite() && a != b {
                        a / (a - b)
                    } else {
                        0.5
                    };
                    crossings.push(s_nodes[i] + w.clamp(0.0, 1.0) * (s_nodes[i + 1] - s_nodes[i]));
                }
            }
            if crossings.len() > 1 {
                single = false;
            }
            all_crossings.push(crossings);
            intervals.push(iv);
        }
        let curve = single.then(|| all_crossings.iter().map(|c| c.first().copied()).collect());
        RegionSet {
            times: times.to_vec(),
            s_nodes: s_nodes.to_vec(),
            intervals,
            crossings: all_crossings,
            curve,
        }
    }

    /// Region from a boolean mask (no sub-cell interpolation).
    pub fn from_mask(times: &[f64], s_nodes: &[f64], mask: &[Vec<bool>]) -> RegionSet {
        let gaps: Vec<Vec<f64>> = mask
            .iter()
            .map(|m| m.iter().map(|&b| if b { -1.0 } else { 1.0 }).collect())
            .collect();
        RegionSet::from_gaps(times, s_nodes, &gaps)
    }

    pub fn contains(&self, k: usize, i: usize) -> bool {
        self.intervals[k].iter().any(|&(a, b)| a <= i && i <= b)
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.iter().all(|v| v.is_empty())
    }

    /// Number of active nodes on slice `k`.
    pub fn count(&self, k: usize) -> usize {
        self.intervals[k].iter().map(|&(a, b)| b - a + 1).sum()
    }

    pub fn total_count(&self) -> usize {
        (0..self.intervals.len()).map(|k| self.count(k)).sum()
    }

    /// `s*(t_k)` if the region has a single-crossing boundary.
    pub fn critical(&self, k: usize) -> Option<f64> {
        self.curve.as_ref().and_then(|c| c[k])
    }

    /// Largest interpolated crossing on slice `k`.
    pub fn upper_crossing(&self, k: usize) -> Option<f64> {
        self.crossings[k].last().copied()
    }

    /// Smallest interpolated crossing on slice `k`.
    pub fn lower_crossing(&self, k: usize) -> Option<f64> {
        self.crossings[k].first().copied()
    }

    pub fn mask(&self, k: usize) -> Vec<bool> {
        let mut m = vec![false; self.s_nodes.len()];
        for &(a, b) in &self.intervals[k] {
            m[a..=b].iter_mut().for_each(|x| *x = true);
        }
        m
    }

    /// Node-wise intersection with `other` (same grid); the curve is
    /// recomputed from the combined mask.
    pub fn intersect(&self, other: &RegionSet) -> Result<RegionSet> {
        if self.times != other.times || self.s_nodes != other.s_nodes {
            return Err(Error::GridMismatch("region grids differ".into()));
        }
        let masks: Vec<Vec<bool>> = (0..self.times.len())
            .map(|k| {
                self.mask(k)
                    .into_iter()
                    .zip(other.mask(k))
                    .map(|(a, b)| a && b)
                    .collect()
            })
            .collect();
        Ok(RegionSet::from_mask(&self.times, &self.s_nodes, &masks))
    }
}

/// Active set `{|a - b| <= tol}` of two surfaces on the same grid.
pub fn extract_region(a: &Surface, b: &Surface, tol: RegionTolerance) -> Result<RegionSet> {
    if !a.same_grid(b) {
        return Err(Error::GridMismatch(format!("'{}' vs '{}'", a.label, b.label)));
    }
    let gaps: Vec<Vec<f64>> = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| x.iter().zip(y).map(|(&p, &q)| (p - q).abs() - tol.bound(q)).collect())
        .collect();
    Ok(RegionSet::from_gaps(a.grid.t(), a.grid.s(), &gaps))
}

/// Two-factor region: one [`RegionSet`] in `s` per `y` node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region2D {
    pub y_nodes: Vec<f64>,
    pub lines: Vec<RegionSet>,
}

impl Region2D {
    pub fn from_gaps(times: &[f64], s_nodes: &[f64], y_nodes: &[f64], gaps: &[Vec<f64>]) -> Region2D {
        let ns = s_nodes.len();
        let lines = (0..y_nodes.len())
            .map(|j| {
                let g: Vec<Vec<f64>> = gaps.iter().map(|slice| slice[j * ns..(j + 1) * ns].to_vec()).collect();
                RegionSet::from_gaps(times, s_nodes, &g)
            })
            .collect();
        Region2D {
            y_nodes: y_nodes.to_vec(),
            lines,
        }
    }

    pub fn contains(&self, k: usize, i: usize, j: usize) -> bool {
        self.lines[j].contains(k, i)
    }

    pub fn is_empty(&self) -> bool {
        self.lines.iter().all(|l| l.is_empty())
    }

    pub fn total_count(&self) -> usize {
        self.lines.iter().map(|l| l.total_count()).sum()
    }
}

pub fn extract_region_2d(a: &Surface2D, b: &Surface2D, tol: RegionTolerance) -> Result<Region2D> {
    if !a.same_grid(b) {
        return Err(Error::GridMismatch(format!("'{}' vs '{}'", a.label, b.label)));
    }
    let gaps: Vec<Vec<f64>> = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| x.iter().zip(y).map(|(&p, &q)| (p - q).abs() - tol.bound(q)).collect())
        .collect();
    let g = &a.grid;
    Ok(Region2D::from_gaps(g.t(), g.s(), g.y(), &gaps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lcp::grid::Grid1D;
    use std::sync::Arc;

    fn grid() -> Arc<Grid1D> {
        Arc::new(Grid1D::uniform(10.0, 10, 1.0, 2).unwrap())
    }

    #[test]
    fn equal_surfaces_give_full_region() {
        let g = grid();
        let a = Surface::from_fn(g.clone(), "a", |t, s| t + s);
        let r = extract_region(&a, &a.clone(), RegionTolerance::default()).unwrap();
        for k in 0..3 {
            assert_eq!(r.intervals[k], vec![(1, 10)]);
            assert_eq!(r.critical(k), None);
        }
    }

    #[test]
    fn shifted_surface_gives_empty_region() {
        let g = grid();
        let a = Surface::from_fn(g.clone(), "a", |_, s| s);
        let b = a.map("b", |v| v + 1.0);
        assert!(extract_region(&a, &b, RegionTolerance::default()).unwrap().is_empty());
    }

    #[test]
    fn half_line_gives_interpolated_curve() {
        let g = grid();
        // active for s <= 4.5
        let gaps: Vec<Vec<f64>> = (0..3).map(|_| g.s().iter().map(|&s| s - 4.5).collect()).collect();
        let r = RegionSet::from_gaps(g.t(), g.s(), &gaps);
        assert_eq!(r.intervals[0], vec![(1, 4)]);
        assert!((r.critical(1).unwrap() - 4.5).abs() < 1e-12);
    }

    #[test]
    fn two_crossings_drop_the_curve() {
        let g = grid();
        let mask: Vec<Vec<bool>> = (0..3).map(|_| (0..11).map(|i| (3..6).contains(&i)).collect()).collect();
        let r = RegionSet::from_mask(g.t(), g.s(), &mask);
        assert_eq!(r.intervals[2], vec![(3, 5)]);
        assert!(r.curve.is_none());
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = Surface::filled(grid(), 0.0, "a");
        let b = Surface::filled(Arc::new(Grid1D::uniform(10.0, 20, 1.0, 2).unwrap()), 0.0, "b");
        assert!(matches!(
            extract_region(&a, &b, RegionTolerance::default()),
            Err(Error::GridMismatch(_))
        ));
    }
}
