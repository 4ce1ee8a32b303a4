//! CSV and JSON writers for surfaces, regions and boundaries. Numbers use
//! the shortest representation that round-trips, so output is byte-stable.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lcp::{Region2D, RegionSet, Surface, Surface2D};

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

/// Long format `t,s,value`.
pub fn write_surface_csv(path: &Path, surface: &Surface) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["t", "s", surface.label.as_str()])
        .map_err(|e| io_err(path, e))?;
    let (t, s) = (surface.grid.t(), surface.grid.s());
    for (k, slice) in surface.values.iter().enumerate() {
        for (i, v) in slice.iter().enumerate() {
            w.write_record([t[k].to_string(), s[i].to_string(), v.to_string()])
                .map_err(|e| io_err(path, e))?;
        }
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Long format `t,s,y,value`.
pub fn write_surface_2d_csv(path: &Path, surface: &Surface2D) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["t", "s", "y", surface.label.as_str()])
        .map_err(|e| io_err(path, e))?;
    let g = &surface.grid;
    let (t, s, y) = (g.t(), g.s(), g.y());
    for (k, slice) in surface.values.iter().enumerate() {
        for (j, &yj) in y.iter().enumerate() {
            for (i, &si) in s.iter().enumerate() {
                w.write_record([
                    t[k].to_string(),
                    si.to_string(),
                    yj.to_string(),
                    slice[g.idx(i, j)].to_string(),
                ])
                .map_err(|e| io_err(path, e))?;
            }
        }
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// One column of boundary levels, indexed by time. Missing levels are empty
/// cells.
pub struct BoundaryColumn<'a> {
    pub name: &'a str,
    pub values: &'a [Option<f64>],
}

/// `t,<columns...>` with one row per time.
pub fn write_boundary_csv(path: &Path, times: &[f64], columns: &[BoundaryColumn<'_>]) -> Result<()> {
    if columns.iter().any(|c| c.values.len() != times.len()) {
        return Err(Error::GridMismatch(
            "boundary column length differs from the time axis".into(),
        ));
    }
    let mut w = csv_writer(path)?;
    let header: Vec<&str> = std::iter::once("t").chain(columns.iter().map(|c| c.name)).collect();
    w.write_record(&header).map_err(|e| io_err(path, e))?;
    for (k, t) in times.iter().enumerate() {
        let row: Vec<String> = std::iter::once(t.to_string())
            .chain(
                columns
                    .iter()
                    .map(|c| c.values[k].map_or(String::new(), |v| v.to_string())),
            )
            .collect();
        w.write_record(&row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// `t,y,s_star` with one row per time and `y` line; the level is the
/// region's single crossing on that line when it has one.
pub fn write_boundary_2d_csv(path: &Path, times: &[f64], region: &Region2D) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["t", "y", "s_star"]).map_err(|e| io_err(path, e))?;
    for (k, t) in times.iter().enumerate() {
        for (j, y) in region.y_nodes.iter().enumerate() {
            let level = region.lines[j].critical(k).map_or(String::new(), |v| v.to_string());
            w.write_record([t.to_string(), y.to_string(), level])
                .map_err(|e| io_err(path, e))?;
        }
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Compact description of a region: node counts and per-slice intervals in
/// `s` at the first and last time.
#[derive(Debug, Clone, Serialize)]
pub struct RegionSummary {
    pub nodes: usize,
    pub empty: bool,
    pub single_crossing: bool,
    pub first_slice: Vec<(f64, f64)>,
    pub last_slice: Vec<(f64, f64)>,
}

impl RegionSummary {
    pub fn of(region: &RegionSet) -> Self {
        let slice = |k: usize| -> Vec<(f64, f64)> {
            region.intervals[k]
                .iter()
                .map(|&(a, b)| (region.s_nodes[a], region.s_nodes[b]))
                .collect()
        };
        let last = region.times.len() - 1;
        RegionSummary {
            nodes: region.total_count(),
            empty: region.is_empty(),
            single_crossing: region.curve.is_some(),
            first_slice: slice(0),
            last_slice: slice(last),
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| io_err(path, e))?;
    w.write_all(b"\n").map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lcp::Grid1D;
    use std::sync::Arc;

    #[test]
    fn surface_round_trips_through_csv() {
        let dir = tempfile::tempdir().unwrap();
        let g = Arc::new(Grid1D::uniform(2.0, 2, 1.0, 1).unwrap());
        let s = Surface::from_fn(g, "u", |t, s| t + 0.1 * s);
        let path = dir.path().join("u.csv");
        write_surface_csv(&path, &s).unwrap();
        let mut r = csv::Reader::from_path(&path).unwrap();
        assert_eq!(r.headers().unwrap(), vec!["t", "s", "u"]);
        let rows: Vec<Vec<f64>> = r
            .records()
            .map(|x| x.unwrap().iter().map(|v| v.parse().unwrap()).collect())
            .collect();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[5], vec![1.0, 2.0, 1.2]);
    }

    #[test]
    fn boundary_leaves_missing_levels_empty() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.csv");
        let col = [Some(1.5), None];
        write_boundary_csv(
            &path,
            &[0.0, 1.0],
            &[BoundaryColumn {
                name: "s_star",
                values: &col,
            }],
        )
        .unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "t,s_star\n0,1.5\n1,\n");
        let bad = write_boundary_csv(
            &path,
            &[0.0],
            &[BoundaryColumn {
                name: "x",
                values: &col,
            }],
        );
        assert!(bad.is_err());
    }
}
