//! File formats: grid CSV, 8-bit PGM heatmaps with a mapping sidecar, and
//! trajectory CSV.
//!
//! Grid CSV:
//!
//! ```text
//! # kind=counts nx=90 ny=90 xmin=-14.25 xmax=14.25 ymin=-12.34 ymax=12.34
//! ix,iy,x,y,value
//! 0,0,<x>,<y>,<value or blank if empty>
//! ```
//!
//! Rows run with `ix` fastest. Floats are written with 17 significant
//! digits so equal inputs give byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::stats::{Bounds, GridKind, HistogramGrid};

pub const DEFAULT_SATURATION: f64 = 220.0;

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn grid_csv_string(grid: &HistogramGrid) -> String {
    let b = grid.bounds;
    let mut out = format!(
        "# kind={} nx={} ny={} xmin={} xmax={} ymin={} ymax={}\nix,iy,x,y,value\n",
        grid.kind.as_str(),
        grid.nx,
        grid.ny,
        num(b.xmin),
        num(b.xmax),
        num(b.ymin),
        num(b.ymax)
    );
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let c = grid.center(ix, iy);
            let value = grid.get(ix, iy).map(num).unwrap_or_default();
            let _ = writeln!(out, "{ix},{iy},{},{},{value}", num(c.x), num(c.y));
        }
    }
    out
}

pub fn write_grid_csv(grid: &HistogramGrid, path: &Path) -> Result<()> {
    fs::write(path, grid_csv_string(grid))?;
    Ok(())
}

pub fn read_grid_csv(path: &Path) -> Result<HistogramGrid> {
    parse_grid_csv(&fs::read_to_string(path)?, &path.display().to_string())
}

/// Parses the text of a grid CSV; `origin` names the source in errors.
pub fn parse_grid_csv(text: &str, origin: &str) -> Result<HistogramGrid> {
    let err = |line: usize, message: String| Error::Parse {
        path: origin.to_string(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (n, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let header = header
        .strip_prefix('#')
        .ok_or_else(|| err(n, "expected a '# kind=...' header".into()))?;
    let mut kind = None;
    let (mut nx, mut ny) = (None, None);
    let mut bounds = [None; 4];
    for field in header.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| err(n, format!("malformed header field {field:?}")))?;
        let float = || value.parse::<f64>().map_err(|e| err(n, format!("{key}: {e}")));
        let count = || value.parse::<usize>().map_err(|e| err(n, format!("{key}: {e}")));
        match key {
            "kind" => kind = Some(GridKind::parse(value).ok_or_else(|| err(n, format!("unknown kind {value:?}")))?),
            "nx" => nx = Some(count()?),
            "ny" => ny = Some(count()?),
            "xmin" => bounds[0] = Some(float()?),
            "xmax" => bounds[1] = Some(float()?),
            "ymin" => bounds[2] = Some(float()?),
            "ymax" => bounds[3] = Some(float()?),
            _ => return Err(err(n, format!("unknown header field {key:?}"))),
        }
    }
    let missing = |what: &str| err(n, format!("header lacks {what}"));
    let kind = kind.ok_or_else(|| missing("kind"))?;
    let nx = nx.filter(|v| *v > 0).ok_or_else(|| missing("a positive nx"))?;
    let ny = ny.filter(|v| *v > 0).ok_or_else(|| missing("a positive ny"))?;
    let [xmin, xmax, ymin, ymax] = bounds.map(|b| b.ok_or_else(|| missing("bounds")));
    let bounds = Bounds {
        xmin: xmin?,
        xmax: xmax?,
        ymin: ymin?,
        ymax: ymax?,
    };

    match lines.next() {
        Some((_, "ix,iy,x,y,value")) => {}
        Some((n, other)) => return Err(err(n, format!("expected column names, got {other:?}"))),
        None => return Err(err(n + 1, "missing column names".into())),
    }

    let mut values = vec![f64::NAN; nx * ny];
    let mut seen = vec![false; nx * ny];
    let mut last = 2;
    for (n, line) in lines {
        last = n;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(err(n, format!("expected 5 columns, found {}", cols.len())));
        }
        let ix: usize = cols[0].parse().map_err(|e| err(n, format!("ix: {e}")))?;
        let iy: usize = cols[1].parse().map_err(|e| err(n, format!("iy: {e}")))?;
        if ix >= nx || iy >= ny {
            return Err(err(n, format!("bin ({ix}, {iy}) outside {nx}x{ny}")));
        }
        let i = iy * nx + ix;
        if seen[i] {
            return Err(err(n, format!("bin ({ix}, {iy}) listed twice")));
        }
        seen[i] = true;
        let v = cols[4].trim();
        if !v.is_empty() {
            values[i] = v.parse().map_err(|e| err(n, format!("value: {e}")))?;
        }
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(err(last, format!("bin ({}, {}) missing", i % nx, i / nx)));
    }
    HistogramGrid::from_values(kind, nx, ny, bounds, values)
}

/// Gray levels for a grid (top image row is the largest `y`) and a text
/// description of the value-to-gray mapping.
///
/// - counts: `[0, saturation] -> [0, 255]`, higher counts clip to 255
/// - mean displacement: `[0, max] -> [0, 255]`
/// - field: `[-max|v|, max|v|] -> [0, 255]`, zero at mid-gray
///
/// Empty bins and all-zero grids render as 0.
pub fn pgm_pixels(grid: &HistogramGrid, saturation: f64) -> (Vec<u8>, String) {
    let max_abs = grid.max_abs();
    let (lo, hi, mapping) = match grid.kind {
        GridKind::Counts => (0.0, saturation, format!("gray = round(255 * min(count, {saturation}) / {saturation})")),
        GridKind::MeanDisplacement => (0.0, max_abs, format!("gray = round(255 * value / {})", num(max_abs))),
        GridKind::Field => (
            -max_abs,
            max_abs,
            format!("gray = round(255 * (value + m) / (2 m)), m = {}", num(max_abs)),
        ),
    };
    let mut px = Vec::with_capacity(grid.nx * grid.ny);
    for iy in (0..grid.ny).rev() {
        for ix in 0..grid.nx {
            let g = match grid.get(ix, iy) {
                Some(v) if hi > lo => (255.0 * ((v - lo) / (hi - lo)).clamp(0.0, 1.0)).round() as u8,
                _ => 0,
            };
            px.push(g);
        }
    }
    let sidecar = format!(
        "kind={}\nwidth={}\nheight={}\nrows=top row is largest y\nmapping={mapping}\nempty=0\n",
        grid.kind.as_str(),
        grid.nx,
        grid.ny
    );
    (px, sidecar)
}

pub fn pgm_bytes(grid: &HistogramGrid, saturation: f64) -> (Vec<u8>, String) {
    let (px, sidecar) = pgm_pixels(grid, saturation);
    let mut out = format!("P5\n{} {}\n255\n", grid.nx, grid.ny).into_bytes();
    out.extend_from_slice(&px);
    (out, sidecar)
}

/// Writes `path` and the mapping sidecar `path.txt`; returns the sidecar
/// path.
pub fn write_pgm(grid: &HistogramGrid, path: &Path, saturation: f64) -> Result<PathBuf> {
    let (bytes, sidecar) = pgm_bytes(grid, saturation);
    fs::write(path, bytes)?;
    let mut side = path.as_os_str().to_owned();
    side.push(".txt");
    let side = PathBuf::from(side);
    fs::write(&side, sidecar)?;
    Ok(side)
}

pub fn trajectory_csv_string(traj: &Trajectory) -> String {
    let mut out = String::from("run_id,iter,x_mm,y_mm,w,p_drawn\n");
    for s in &traj.states {
        let p = s.p.map(num).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{p}",
            s.run_id,
            s.iter,
            num(s.pos.x),
            num(s.pos.y),
            num(s.w)
        );
    }
    out
}

pub fn write_trajectory_csv(traj: &Trajectory, path: &Path) -> Result<()> {
    fs::write(path, trajectory_csv_string(traj))?;
    Ok(())
}
