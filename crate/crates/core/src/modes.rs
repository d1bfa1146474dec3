//! Dirichlet eigenmodes of the elliptical corral.
//!
//! A mode is the product `R(xi) * Theta(eta)` of a radial and an angular
//! Mathieu function sharing one `q`. The boundary condition `R(xi0, q) = 0`
//! quantizes `q`; the `j`-th root in increasing `q` labels the mode. Values
//! are scaled so the largest magnitude over the corral is one.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{EllipseGeometry, Point};
use crate::specfun::{angular_solve, AngularSolution, ModeSpec, DEFAULT_TERMS, Q_MAX};
use crate::stats::HistogramGrid;

/// Step of the sign-change scan over `q`.
pub const SCAN_STEP: f64 = 0.05;
/// Per-axis resolution of the interior scan that fixes the normalization.
pub const NORM_RESOLUTION: usize = 512;
pub const DEFAULT_CACHE_RESOLUTION: usize = 1024;
/// Default centered-difference steps `h = k` (mm).
pub const DEFAULT_FD_STEP: f64 = 1e-2;
/// Modes are evaluated up to this far beyond the wall in `xi`.
pub const XI_MARGIN: f64 = 0.5;
/// The cache box extends this far (mm) beyond the corral's bounding box so
/// that gradient stencils at the wall stay on the grid.
pub const CACHE_PAD: f64 = 0.25;

/// How a mode value is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Evaluation {
    /// Full Mathieu product at the point.
    #[default]
    Direct,
    /// Bilinear interpolation on the cache when one is attached and covers
    /// the point; direct evaluation otherwise.
    Cached,
}

/// Radial function of `spec` at the wall, as a function of `q`.
pub fn boundary_function(spec: &ModeSpec, geom: &EllipseGeometry, q: f64) -> Result<f64> {
    angular_solve(spec, q, DEFAULT_TERMS)?.eval_radial(geom.xi0())
}

/// The first `count` roots of the boundary condition in `(0, Q_MAX]`.
/// Returns fewer if the window holds fewer.
pub fn boundary_roots(spec: &ModeSpec, geom: &EllipseGeometry, count: usize) -> Result<Vec<f64>> {
    let f = |q: f64| boundary_function(spec, geom, q);
    let steps = (Q_MAX / SCAN_STEP).round() as usize;
    let mut roots = Vec::with_capacity(count);
    let mut q_prev = SCAN_STEP;
    let mut f_prev = f(q_prev)?;
    for i in 2..=steps {
        if roots.len() == count {
            break;
        }
        let q = i as f64 * SCAN_STEP;
        let fq = f(q)?;
        if f_prev == 0.0 {
            roots.push(q_prev);
        } else if f_prev * fq < 0.0 {
            roots.push(bisect(&f, q_prev, q, f_prev)?);
        }
        q_prev = q;
        f_prev = fq;
    }
    Ok(roots)
}

fn bisect(f: &impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64, mut f_lo: f64) -> Result<f64> {
    // Runs to floating-point resolution; |hi - lo| <= 1e-6 is reached long
    // before the loop ends.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `q_{n,j}`: the `radial_index`-th boundary root of `spec`.
pub fn find_q(spec: &ModeSpec, geom: &EllipseGeometry) -> Result<f64> {
    spec.validate()?;
    let wanted = spec.radial_index as usize;
    let roots = boundary_roots(spec, geom, wanted)?;
    roots.get(wanted - 1).copied().ok_or(Error::RootNotFound {
        mode: spec.label(),
        found: roots.len(),
        wanted,
        q_max: Q_MAX,
    })
}

/// Uniform node grid of precomputed normalized mode values.
#[derive(Debug, Clone)]
pub struct GridCache {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
    /// Row-major, `values[iy * nx + ix]` at `(x0 + ix dx, y0 + iy dy)`.
    pub values: Vec<f64>,
}

impl GridCache {
    pub fn interpolate(&self, p: Point) -> Option<f64> {
        let fx = (p.x - self.x0) / self.dx;
        let fy = (p.y - self.y0) / self.dy;
        if !(fx >= 0.0 && fy >= 0.0) {
            return None;
        }
        let (ix, iy) = (fx.floor() as usize, fy.floor() as usize);
        if ix + 1 >= self.nx || iy + 1 >= self.ny {
            return None;
        }
        let (tx, ty) = (fx - ix as f64, fy - iy as f64);
        let at = |i: usize, j: usize| self.values[j * self.nx + i];
        let bottom = at(ix, iy) * (1.0 - tx) + at(ix + 1, iy) * tx;
        let top = at(ix, iy + 1) * (1.0 - tx) + at(ix + 1, iy + 1) * tx;
        Some(bottom * (1.0 - ty) + top * ty)
    }
}

#[derive(Debug, Clone)]
pub struct Eigenmode {
    pub spec: ModeSpec,
    pub q: f64,
    pub angular: AngularSolution,
    /// Scale applied to the raw Mathieu product.
    pub norm: f64,
    geom: EllipseGeometry,
    cache: Option<GridCache>,
}

/// Finds `q` for `spec` and assembles the normalized mode.
pub fn build_mode(spec: &ModeSpec, geom: &EllipseGeometry) -> Result<Eigenmode> {
    let q = find_q(spec, geom)?;
    Eigenmode::at_q(spec, geom, q)
}

impl Eigenmode {
    /// Assembles the mode at a given `q` without searching for it.
    pub fn at_q(spec: &ModeSpec, geom: &EllipseGeometry, q: f64) -> Result<Self> {
        let angular = angular_solve(spec, q, DEFAULT_TERMS)?;
        let mut mode = Self {
            spec: *spec,
            q,
            angular,
            norm: 1.0,
            geom: *geom,
            cache: None,
        };
        let peak = mode.interior_peak(NORM_RESOLUTION)?;
        if !(peak > 0.0) {
            return Err(Error::Domain(format!(
                "mode {} vanishes on the normalization grid",
                spec.label()
            )));
        }
        mode.norm = 1.0 / peak;
        Ok(mode)
    }

    /// Largest `|value|` over the cell centers of a `res x res` partition of
    /// the bounding box that fall inside the corral.
    pub fn interior_peak(&self, res: usize) -> Result<f64> {
        let (a, b) = (self.geom.semi_major(), self.geom.semi_minor());
        let rows: Result<Vec<f64>> = (0..res)
            .into_par_iter()
            .map(|j| {
                let y = -b + 2.0 * b * (j as f64 + 0.5) / res as f64;
                let mut peak: f64 = 0.0;
                for i in 0..res {
                    let x = -a + 2.0 * a * (i as f64 + 0.5) / res as f64;
                    let p = Point::new(x, y);
                    if self.geom.contains(p) {
                        peak = peak.max(self.value(p)?.abs());
                    }
                }
                Ok(peak)
            })
            .collect();
        Ok(rows?.into_iter().fold(0.0, f64::max))
    }

    pub fn geometry(&self) -> &EllipseGeometry {
        &self.geom
    }

    /// Helmholtz wavenumber squared, `k^2 = 4 q / A^2` (mm^-2).
    pub fn wavenumber_sq(&self) -> f64 {
        4.0 * self.q / self.geom.focal_distance().powi(2)
    }

    /// Normalized value by direct Mathieu evaluation. Points whose radial
    /// coordinate exceeds `xi0 + XI_MARGIN` are rejected.
    pub fn value(&self, p: Point) -> Result<f64> {
        let (xi, eta) = self.geom.cartesian_to_elliptical(p);
        let limit = self.geom.xi0() + XI_MARGIN;
        if xi > limit {
            return Err(Error::OutsideEvaluationDomain { xi, limit });
        }
        self.value_elliptical(xi, eta)
    }

    pub fn value_elliptical(&self, xi: f64, eta: f64) -> Result<f64> {
        Ok(self.norm * self.angular.eval_radial(xi)? * self.angular.eval_angular(eta))
    }

    pub fn value_with(&self, p: Point, how: Evaluation) -> Result<f64> {
        match (how, &self.cache) {
            (Evaluation::Cached, Some(cache)) => match cache.interpolate(p) {
                Some(v) => Ok(v),
                None => self.value(p),
            },
            _ => self.value(p),
        }
    }

    /// Second-order centered differences with steps `h` in x and `k` in y.
    pub fn gradient(&self, p: Point, h: f64, k: f64, how: Evaluation) -> Result<(f64, f64)> {
        if !(h > 0.0 && k > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "finite-difference steps must be positive, got h = {h}, k = {k}"
            )));
        }
        let f = |x: f64, y: f64| self.value_with(Point::new(x, y), how);
        let gx = (f(p.x + h, p.y)? - f(p.x - h, p.y)?) / (2.0 * h);
        let gy = (f(p.x, p.y + k)? - f(p.x, p.y - k)?) / (2.0 * k);
        Ok((gx, gy))
    }

    /// Precomputes normalized values on a `res x res` node grid spanning the
    /// bounding box plus [`CACHE_PAD`].
    pub fn with_cache(mut self, res: usize) -> Result<Self> {
        if res < 2 {
            return Err(Error::InvalidParameter("cache needs at least 2 nodes per axis".into()));
        }
        let (a, b) = (self.geom.semi_major() + CACHE_PAD, self.geom.semi_minor() + CACHE_PAD);
        let (dx, dy) = (2.0 * a / (res - 1) as f64, 2.0 * b / (res - 1) as f64);
        let rows: Result<Vec<Vec<f64>>> = (0..res)
            .into_par_iter()
            .map(|j| {
                let y = -b + j as f64 * dy;
                (0..res)
                    .map(|i| self.value(Point::new(-a + i as f64 * dx, y)))
                    .collect()
            })
            .collect();
        self.cache = Some(GridCache {
            nx: res,
            ny: res,
            x0: -a,
            y0: -b,
            dx,
            dy,
            values: rows?.concat(),
        });
        Ok(self)
    }

    pub fn cache(&self) -> Option<&GridCache> {
        self.cache.as_ref()
    }

    /// Mode values at the bin centers of an `nx x ny` grid over the bounding
    /// box; bins whose center is outside the corral are left empty.
    pub fn grid(&self, nx: usize, ny: usize) -> Result<HistogramGrid> {
        HistogramGrid::sample_field(&self.geom, nx, ny, |p| self.value(p))
    }
}
