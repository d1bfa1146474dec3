//! Long-time statistics on a rectangular grid over the corral's bounding
//! box: position counts, mean displacement per iteration, and averaged
//! wavefields.
//!
//! Bins are half-open `[lo, hi)` along each axis except the last, which is
//! closed, so every point of the bounding box lands in exactly one bin.
//! Storage is row-major: `values[iy * nx + ix]`, `iy` increasing with `y`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{ModePair, Trajectory};
use crate::error::{Error, Result};
use crate::geometry::{EllipseGeometry, Point};

pub const DEFAULT_BINS: usize = 90;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    Counts,
    MeanDisplacement,
    Field,
}

impl GridKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Counts => "counts",
            Self::MeanDisplacement => "mean_displacement",
            Self::Field => "field",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "counts" => Some(Self::Counts),
            "mean_displacement" => Some(Self::MeanDisplacement),
            "field" => Some(Self::Field),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl Bounds {
    pub fn of_ellipse(geom: &EllipseGeometry) -> Self {
        let (a, b) = (geom.semi_major(), geom.semi_minor());
        Self {
            xmin: -a,
            xmax: a,
            ymin: -b,
            ymax: b,
        }
    }
}

/// A binned 2-D quantity. Empty bins (never visited, or outside the
/// corral for fields) hold `NaN` and read back as `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramGrid {
    pub nx: usize,
    pub ny: usize,
    pub bounds: Bounds,
    pub kind: GridKind,
    values: Vec<f64>,
    visits: Vec<u64>,
}

impl HistogramGrid {
    pub fn new(kind: GridKind, nx: usize, ny: usize, bounds: Bounds) -> Self {
        let fill = match kind {
            GridKind::Counts => 0.0,
            GridKind::MeanDisplacement | GridKind::Field => f64::NAN,
        };
        Self {
            nx,
            ny,
            bounds,
            kind,
            values: vec![fill; nx * ny],
            visits: vec![0; nx * ny],
        }
    }

    /// Rebuilds a grid from stored values (`NaN` = empty).
    pub fn from_values(kind: GridKind, nx: usize, ny: usize, bounds: Bounds, values: Vec<f64>) -> Result<Self> {
        if values.len() != nx * ny {
            return Err(Error::InvalidParameter(format!(
                "grid of {nx}x{ny} needs {} values, got {}",
                nx * ny,
                values.len()
            )));
        }
        let visits = values
            .iter()
            .map(|v| match kind {
                GridKind::Counts => *v as u64,
                _ => u64::from(!v.is_nan()),
            })
            .collect();
        Ok(Self {
            nx,
            ny,
            bounds,
            kind,
            values,
            visits,
        })
    }

    /// Evaluates `f` at every bin center inside the corral.
    pub fn sample_field(
        geom: &EllipseGeometry,
        nx: usize,
        ny: usize,
        f: impl Fn(Point) -> Result<f64> + Sync,
    ) -> Result<Self> {
        use rayon::prelude::*;
        let mut grid = Self::new(GridKind::Field, nx, ny, Bounds::of_ellipse(geom));
        let centers: Vec<Point> = (0..nx * ny).map(|i| grid.center(i % nx, i / nx)).collect();
        let values: Result<Vec<f64>> = centers
            .par_iter()
            .map(|&p| if geom.contains(p) { f(p) } else { Ok(f64::NAN) })
            .collect();
        grid.values = values?;
        grid.visits = grid.values.iter().map(|v| u64::from(!v.is_nan())).collect();
        Ok(grid)
    }

    pub fn bin_width(&self) -> (f64, f64) {
        (
            (self.bounds.xmax - self.bounds.xmin) / self.nx as f64,
            (self.bounds.ymax - self.bounds.ymin) / self.ny as f64,
        )
    }

    pub fn center(&self, ix: usize, iy: usize) -> Point {
        let (wx, wy) = self.bin_width();
        Point::new(
            self.bounds.xmin + (ix as f64 + 0.5) * wx,
            self.bounds.ymin + (iy as f64 + 0.5) * wy,
        )
    }

    pub fn bin_of(&self, p: Point) -> Option<(usize, usize)> {
        let ix = axis_bin(p.x, self.bounds.xmin, self.bounds.xmax, self.nx)?;
        let iy = axis_bin(p.y, self.bounds.ymin, self.bounds.ymax, self.ny)?;
        Some((ix, iy))
    }

    pub fn get(&self, ix: usize, iy: usize) -> Option<f64> {
        let v = self.values[iy * self.nx + ix];
        (!v.is_nan()).then_some(v)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of samples behind each bin (counts for `Counts`, steps for
    /// `MeanDisplacement`, 1 per evaluated node for `Field`).
    pub fn visits(&self) -> &[u64] {
        &self.visits
    }

    pub fn total(&self) -> f64 {
        self.values.iter().filter(|v| !v.is_nan()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .filter(|v| !v.is_nan())
            .fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    fn add_count(&mut self, p: Point) -> bool {
        match self.bin_of(p) {
            Some((ix, iy)) => {
                let i = iy * self.nx + ix;
                self.values[i] += 1.0;
                self.visits[i] += 1;
                true
            }
            None => false,
        }
    }

    fn add_sample(&mut self, p: Point, value: f64) {
        if let Some((ix, iy)) = self.bin_of(p) {
            let i = iy * self.nx + ix;
            let n = self.visits[i] as f64;
            let old = if n == 0.0 { 0.0 } else { self.values[i] };
            self.values[i] = old + (value - old) / (n + 1.0);
            self.visits[i] += 1;
        }
    }

    /// Combines a partial grid from an independent batch: counts add,
    /// mean displacements combine weighted by visits.
    pub fn merge(&mut self, other: &HistogramGrid) -> Result<()> {
        if self.kind != other.kind || self.nx != other.nx || self.ny != other.ny || self.bounds != other.bounds {
            return Err(Error::InvalidParameter("cannot merge grids of different shape or kind".into()));
        }
        match self.kind {
            GridKind::Counts => {
                for (v, o) in self.values.iter_mut().zip(&other.values) {
                    *v += o;
                }
                for (v, o) in self.visits.iter_mut().zip(&other.visits) {
                    *v += o;
                }
            }
            GridKind::MeanDisplacement => {
                for i in 0..self.values.len() {
                    let (n1, n2) = (self.visits[i], other.visits[i]);
                    if n2 == 0 {
                        continue;
                    }
                    self.values[i] = if n1 == 0 {
                        other.values[i]
                    } else {
                        (self.values[i] * n1 as f64 + other.values[i] * n2 as f64) / (n1 + n2) as f64
                    };
                    self.visits[i] = n1 + n2;
                }
            }
            GridKind::Field => {
                return Err(Error::InvalidParameter("field grids are not accumulated".into()));
            }
        }
        Ok(())
    }

    /// Divides by the largest magnitude; returns that factor.
    fn normalize_max_abs(&mut self) -> Result<f64> {
        let m = self.max_abs();
        if !(m > 0.0) {
            return Err(Error::InvalidParameter("field is identically zero".into()));
        }
        for v in self.values.iter_mut() {
            *v /= m;
        }
        Ok(m)
    }
}

fn axis_bin(v: f64, lo: f64, hi: f64, n: usize) -> Option<usize> {
    if !(v >= lo && v <= hi) {
        return None;
    }
    let edge = |i: usize| lo + (hi - lo) * i as f64 / n as f64;
    let mut i = (((v - lo) / (hi - lo) * n as f64).floor() as usize).min(n - 1);
    if i > 0 && v < edge(i) {
        i -= 1;
    } else if i + 1 < n && v >= edge(i + 1) {
        i += 1;
    }
    Some(i)
}

/// Occupancy counts of every recorded state.
pub fn position_histogram(trajs: &[Trajectory], geom: &EllipseGeometry, nx: usize, ny: usize) -> HistogramGrid {
    let mut grid = HistogramGrid::new(GridKind::Counts, nx, ny, Bounds::of_ellipse(geom));
    for s in trajs.iter().flat_map(|t| &t.states) {
        grid.add_count(s.pos);
    }
    grid
}

/// Mean step length `|pos_{n+1} - pos_n|`, binned by the step's starting
/// position. Steps spanning a restart are skipped.
pub fn displacement_histogram(trajs: &[Trajectory], geom: &EllipseGeometry, nx: usize, ny: usize) -> HistogramGrid {
    let mut grid = HistogramGrid::new(GridKind::MeanDisplacement, nx, ny, Bounds::of_ellipse(geom));
    for t in trajs {
        let mut boundaries = t.run_boundaries.iter().peekable();
        for (i, pair) in t.states.windows(2).enumerate() {
            while boundaries.peek().is_some_and(|&&b| b <= i) {
                boundaries.next();
            }
            if boundaries.peek().is_some_and(|&&b| b == i + 1) {
                continue;
            }
            grid.add_sample(pair[0].pos, pair[0].pos.distance(&pair[1].pos));
        }
    }
    grid
}

/// The two mode shapes sampled on a common grid.
#[derive(Debug, Clone)]
pub struct ModeGrids {
    pub alpha: HistogramGrid,
    pub beta: HistogramGrid,
}

impl ModeGrids {
    pub fn new(modes: &ModePair, nx: usize, ny: usize) -> Result<Self> {
        Ok(Self {
            alpha: modes.alpha_mode.grid(nx, ny)?,
            beta: modes.beta_mode.grid(nx, ny)?,
        })
    }

    /// Nodewise `wa * Psi_alpha + wb * Psi_beta`.
    pub fn combine(&self, wa: f64, wb: f64) -> HistogramGrid {
        let mut out = self.alpha.clone();
        for (v, b) in out.values.iter_mut().zip(&self.beta.values) {
            *v = wa * *v + wb * b;
        }
        out
    }
}

/// `E_p[Psi] = 0.25 alpha Psi_alpha + 0.25 beta Psi_beta` for
/// `p ~ U[0, 0.5]`, scaled to unit peak magnitude.
pub fn averaged_field_analytic(modes: &ModePair, alpha: f64, beta: f64, nx: usize, ny: usize) -> Result<HistogramGrid> {
    averaged_field_analytic_on(&ModeGrids::new(modes, nx, ny)?, alpha, beta)
}

pub fn averaged_field_analytic_on(grids: &ModeGrids, alpha: f64, beta: f64) -> Result<HistogramGrid> {
    let mut g = grids.combine(0.25 * alpha, 0.25 * beta);
    g.normalize_max_abs()?;
    Ok(g)
}

/// Nodewise mean of `draws` sampled fields
/// `p alpha Psi_alpha + (0.5 - p) beta Psi_beta`, scaled to unit peak.
pub fn averaged_field_mc(
    modes: &ModePair,
    alpha: f64,
    beta: f64,
    draws: usize,
    seed: u64,
    nx: usize,
    ny: usize,
) -> Result<HistogramGrid> {
    averaged_field_mc_on(&ModeGrids::new(modes, nx, ny)?, alpha, beta, draws, seed)
}

pub fn averaged_field_mc_on(grids: &ModeGrids, alpha: f64, beta: f64, draws: usize, seed: u64) -> Result<HistogramGrid> {
    if draws == 0 {
        return Err(Error::InvalidParameter("Monte Carlo average needs at least one draw".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    averaged_field_from_draws(grids, alpha, beta, (0..draws).map(|_| 0.5 * rng.gen::<f64>()))
}

/// Averages the sampled fields for the given `p` values. The field is
/// linear in `p`, so the nodewise mean is accumulated through the sums of
/// the two weights.
pub fn averaged_field_from_draws(
    grids: &ModeGrids,
    alpha: f64,
    beta: f64,
    draws: impl IntoIterator<Item = f64>,
) -> Result<HistogramGrid> {
    let (mut n, mut sum_a, mut sum_b) = (0usize, 0.0, 0.0);
    for p in draws {
        n += 1;
        sum_a += p * alpha;
        sum_b += (0.5 - p) * beta;
    }
    if n == 0 {
        return Err(Error::InvalidParameter("Monte Carlo average needs at least one draw".into()));
    }
    let mut g = grids.combine(sum_a / n as f64, sum_b / n as f64);
    g.normalize_max_abs()?;
    Ok(g)
}

/// Largest nodewise `|a - b|` over nodes present in both grids.
pub fn max_deviation(a: &HistogramGrid, b: &HistogramGrid) -> f64 {
    paired(a, b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Root-mean-square nodewise difference over nodes present in both grids.
pub fn rms_deviation(a: &HistogramGrid, b: &HistogramGrid) -> f64 {
    let (n, s) = paired(a, b).fold((0usize, 0.0), |(n, s), (x, y)| (n + 1, s + (x - y).powi(2)));
    if n == 0 {
        0.0
    } else {
        (s / n as f64).sqrt()
    }
}

/// Pearson correlation of two grids over nodes present in both.
pub fn grid_correlation(a: &HistogramGrid, b: &HistogramGrid) -> f64 {
    let (xs, ys): (Vec<f64>, Vec<f64>) = paired(a, b).unzip();
    pearson(&xs, &ys)
}

fn paired<'a>(a: &'a HistogramGrid, b: &'a HistogramGrid) -> impl Iterator<Item = (f64, f64)> + 'a {
    a.values
        .iter()
        .zip(&b.values)
        .filter(|(x, y)| !x.is_nan() && !y.is_nan())
        .map(|(x, y)| (*x, *y))
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len().min(ys.len()) as f64;
    if n < 2.0 {
        return f64::NAN;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// Ranks starting at 1; ties share their average rank.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let rank = 0.5 * (i + j) as f64 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    pearson(&ranks(xs), &ranks(ys))
}

/// Fraction of bins whose center lies inside the corral that were visited.
pub fn interior_occupancy(counts: &HistogramGrid, geom: &EllipseGeometry) -> f64 {
    let (mut inside, mut visited) = (0usize, 0usize);
    for iy in 0..counts.ny {
        for ix in 0..counts.nx {
            if geom.contains(counts.center(ix, iy)) {
                inside += 1;
                if counts.values[iy * counts.nx + ix] > 0.0 {
                    visited += 1;
                }
            }
        }
    }
    visited as f64 / inside.max(1) as f64
}

/// Spearman correlation between bin occupancy and bin mean displacement
/// over bins with at least `min_visits` recorded states.
pub fn occupancy_displacement_correlation(counts: &HistogramGrid, disp: &HistogramGrid, min_visits: u64) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = counts
        .values
        .iter()
        .zip(&disp.values)
        .filter(|(c, d)| **c >= min_visits as f64 && !d.is_nan())
        .map(|(c, d)| (*c, *d))
        .unzip();
    (xs.len() >= 3).then(|| spearman(&xs, &ys))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::WalkerState;
    use proptest::prelude::*;

    fn geom() -> EllipseGeometry {
        EllipseGeometry::experimental()
    }

    fn traj(points: &[(f64, f64)], boundaries: Vec<usize>) -> Trajectory {
        let mut run = 0;
        let states = points
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| {
                if boundaries.contains(&i) {
                    run += 1;
                }
                WalkerState {
                    pos: Point::new(x, y),
                    w: 0.0,
                    iter: i as u64,
                    run_id: run,
                    p: None,
                }
            })
            .collect();
        Trajectory {
            states,
            run_boundaries: boundaries,
            escape_count: 0,
        }
    }

    #[test]
    fn bin_edges_are_half_open() {
        let g = HistogramGrid::new(GridKind::Counts, 90, 90, Bounds::of_ellipse(&geom()));
        let edge = -14.25 + 28.5 * 10.0 / 90.0;
        assert_eq!(g.bin_of(Point::new(edge, 0.0)).unwrap().0, 10);
        assert_eq!(g.bin_of(Point::new(14.25, 0.0)).unwrap().0, 89);
        assert_eq!(g.bin_of(Point::new(-14.25, 0.0)).unwrap().0, 0);
        assert!(g.bin_of(Point::new(14.2501, 0.0)).is_none());
    }

    #[test]
    fn stationary_trajectory_fills_one_bin() {
        let t = traj(&vec![(1.0, 2.0); 500], vec![]);
        let h = position_histogram(std::slice::from_ref(&t), &geom(), 90, 90);
        assert_eq!(h.total(), 500.0);
        assert_eq!(h.values().iter().filter(|v| **v > 0.0).count(), 1);
        let d = displacement_histogram(&[t], &geom(), 90, 90);
        let (ix, iy) = d.bin_of(Point::new(1.0, 2.0)).unwrap();
        assert_eq!(d.get(ix, iy), Some(0.0));
        assert_eq!(d.values().iter().filter(|v| !v.is_nan()).count(), 1);
    }

    #[test]
    fn constant_steps_read_back_exactly() {
        let pts: Vec<(f64, f64)> = (0..40).map(|i| (-10.0 + 0.5 * i as f64, 0.3)).collect();
        let d = displacement_histogram(&[traj(&pts, vec![])], &geom(), 90, 90);
        for v in d.values().iter().filter(|v| !v.is_nan()) {
            assert!((v - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn steps_across_restarts_are_skipped() {
        let pts = [(0.0, 0.0), (0.1, 0.0), (10.0, 5.0), (10.1, 5.0)];
        let d = displacement_histogram(&[traj(&pts, vec![2])], &geom(), 90, 90);
        assert_eq!(d.visits().iter().sum::<u64>(), 2);
        assert!(d.values().iter().filter(|v| !v.is_nan()).all(|v| (v - 0.1).abs() < 1e-12));
    }

    #[test]
    fn histograms_are_additive() {
        let a = traj(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)], vec![]);
        let b = traj(&[(-3.0, 1.0), (1.0, 1.0)], vec![]);
        let both = position_histogram(&[a.clone(), b.clone()], &geom(), 90, 90);
        let mut merged = position_histogram(std::slice::from_ref(&a), &geom(), 90, 90);
        merged.merge(&position_histogram(std::slice::from_ref(&b), &geom(), 90, 90)).unwrap();
        assert_eq!(both, merged);

        let both = displacement_histogram(&[a.clone(), b.clone()], &geom(), 90, 90);
        let mut merged = displacement_histogram(&[a], &geom(), 90, 90);
        merged.merge(&displacement_histogram(&[b], &geom(), 90, 90)).unwrap();
        for (x, y) in both.values().iter().zip(merged.values()) {
            assert!((x.is_nan() && y.is_nan()) || (x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn displacement_ignores_run_labels() {
        let pts = [(0.0, 0.0), (0.2, 0.0), (5.0, 5.0), (5.0, 5.4), (5.0, 5.9)];
        let t = traj(&pts, vec![2]);
        let mut relabeled = t.clone();
        for s in relabeled.states.iter_mut() {
            s.run_id = 7 - s.run_id;
        }
        let a = displacement_histogram(&[t], &geom(), 90, 90);
        let b = displacement_histogram(&[relabeled], &geom(), 90, 90);
        assert_eq!(a.visits(), b.visits());
    }

    #[test]
    fn rank_correlation_basics() {
        assert_eq!(ranks(&[3.0, 1.0, 2.0, 1.0]), vec![4.0, 1.5, 3.0, 1.5]);
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert!((spearman(&xs, &[10.0, 20.0, 25.0, 70.0, 80.0]) - 1.0).abs() < 1e-12);
        assert!((spearman(&xs, &[5.0, 4.0, 3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
        // scipy.stats.spearmanr([1,2,3,4,5],[2,1,4,3,5]) = 0.8
        assert!((spearman(&xs, &[2.0, 1.0, 4.0, 3.0, 5.0]) - 0.8).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn counts_conserve_mass(pts in prop::collection::vec((-14.25f64..14.25, -12.3f64..12.3), 1..300)) {
            let inside: Vec<(f64, f64)> = pts.into_iter()
                .filter(|&(x, y)| geom().contains(Point::new(x, y)))
                .collect();
            prop_assume!(!inside.is_empty());
            let h = position_histogram(&[traj(&inside, vec![])], &geom(), 90, 90);
            prop_assert_eq!(h.total(), inside.len() as f64);
        }

        #[test]
        fn interior_edges_land_in_one_bin(k in 1usize..90) {
            let g = HistogramGrid::new(GridKind::Counts, 90, 90, Bounds::of_ellipse(&geom()));
            let x = -14.25 + 28.5 * k as f64 / 90.0;
            let (ix, _) = g.bin_of(Point::new(x, 0.0)).unwrap();
            prop_assert_eq!(ix, k);
        }
    }
}
