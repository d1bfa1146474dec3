//! The elliptical corral and its confocal elliptical coordinates.
//!
//! `x = A cosh(xi) cos(eta)`, `y = A sinh(xi) sin(eta)` with `A` the
//! semi-focal distance. The corral wall is the level set `xi = xi0`.
//! All lengths are in millimeters.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Semi-major axis of the experimental corral (mm).
pub const DEFAULT_SEMI_MAJOR: f64 = 14.25;
/// Eccentricity of the experimental corral.
pub const DEFAULT_ECCENTRICITY: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipseGeometry {
    a: f64,
    e: f64,
    b: f64,
    focal: f64,
    xi0: f64,
}

impl EllipseGeometry {
    /// Builds the corral from its semi-major axis (mm) and eccentricity.
    pub fn new(a: f64, e: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "semi-major axis must be positive, got {a}"
            )));
        }
        if !(e > 0.0 && e < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "eccentricity must lie in (0, 1), got {e}"
            )));
        }
        let b = a * (1.0 - e * e).sqrt();
        Ok(Self {
            a,
            e,
            b,
            focal: a * e,
            xi0: (b / a).atanh(),
        })
    }

    /// The 14.25 mm, e = 0.5 corral.
    pub fn experimental() -> Self {
        Self::new(DEFAULT_SEMI_MAJOR, DEFAULT_ECCENTRICITY).expect("valid default geometry")
    }

    pub fn semi_major(&self) -> f64 {
        self.a
    }

    pub fn semi_minor(&self) -> f64 {
        self.b
    }

    pub fn eccentricity(&self) -> f64 {
        self.e
    }

    /// Semi-focal distance `A`.
    pub fn focal_distance(&self) -> f64 {
        self.focal
    }

    /// Radial coordinate of the wall.
    pub fn xi0(&self) -> f64 {
        self.xi0
    }

    pub fn elliptical_to_cartesian(&self, xi: f64, eta: f64) -> Point {
        Point::new(
            self.focal * xi.cosh() * eta.cos(),
            self.focal * xi.sinh() * eta.sin(),
        )
    }

    /// Inverse transform, returning `(xi, eta)` with `xi >= 0` and
    /// `eta` in `[-pi, pi]`.
    ///
    /// `eta` takes the sign of `y`. Points on the focal segment
    /// (`y == 0`, `|x| <= A`) map to `xi = 0`, `eta = +acos(x / A)`.
    pub fn cartesian_to_elliptical(&self, p: Point) -> (f64, f64) {
        let a2 = self.focal * self.focal;
        let y = if p.y == 0.0 { 0.0 } else { p.y };
        let t = p.x * p.x + y * y - a2;
        let disc = t.hypot(2.0 * self.focal * y);
        // sinh^2(xi) and its complement sin^2(eta) are the two roots of
        // A^2 s^2 - t s - y^2 = 0; pick the cancellation-free form of each.
        let sinh2 = if t >= 0.0 {
            (t + disc) / (2.0 * a2)
        } else {
            2.0 * y * y / (disc - t)
        };
        let sinh_xi = sinh2.sqrt();
        let xi = sinh_xi.asinh();
        if sinh_xi == 0.0 {
            return (0.0, (p.x / self.focal).clamp(-1.0, 1.0).acos());
        }
        let eta = (y * xi.cosh()).atan2(p.x * sinh_xi);
        (xi, eta)
    }

    /// Boundary-inclusive containment: `(x/a)^2 + (y/b)^2 <= 1`.
    pub fn contains(&self, p: Point) -> bool {
        let u = p.x / self.a;
        let v = p.y / self.b;
        u * u + v * v <= 1.0
    }

    /// Uniform point in the interior, by rejection from the bounding box.
    pub fn sample_interior<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        self.sample_interior_counted(rng).0
    }

    /// Like [`sample_interior`](Self::sample_interior), also returning the
    /// number of bounding-box candidates drawn.
    pub fn sample_interior_counted<R: Rng + ?Sized>(&self, rng: &mut R) -> (Point, u32) {
        let mut tries = 0;
        loop {
            tries += 1;
            let x = self.a * (2.0 * rng.gen::<f64>() - 1.0);
            let y = self.b * (2.0 * rng.gen::<f64>() - 1.0);
            let p = Point::new(x, y);
            if self.contains(p) {
                return (p, tries);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn derived_constants() {
        let g = EllipseGeometry::experimental();
        assert_relative_eq!(g.focal_distance(), 7.125);
        assert_relative_eq!(g.semi_minor(), 14.25 * 0.75f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(g.semi_minor(), 12.3409, epsilon = 1e-4);
        assert_relative_eq!(g.focal_distance() * g.xi0().cosh(), 14.25, max_relative = 1e-12);
        assert_relative_eq!(g.focal_distance() * g.xi0().sinh(), g.semi_minor(), max_relative = 1e-12);
    }

    #[test]
    fn rejects_degenerate_shapes() {
        assert!(EllipseGeometry::new(14.25, 0.0).is_err());
        assert!(EllipseGeometry::new(14.25, 1.0).is_err());
        assert!(EllipseGeometry::new(-1.0, 0.5).is_err());
    }

    #[test]
    fn forward_transform_examples() {
        let g = EllipseGeometry::experimental();
        let p = g.elliptical_to_cartesian(0.0, 0.0);
        assert_eq!((p.x, p.y), (7.125, 0.0));
        let p = g.elliptical_to_cartesian(g.xi0(), FRAC_PI_2);
        assert!(p.x.abs() < 1e-12);
        assert_relative_eq!(p.y, g.semi_minor(), max_relative = 1e-12);
        let p = g.elliptical_to_cartesian(g.xi0(), 0.0);
        assert_relative_eq!(p.x, 14.25, max_relative = 1e-12);
        assert_eq!(p.y, 0.0);
    }

    #[test]
    fn inverse_transform_examples() {
        let g = EllipseGeometry::experimental();
        assert_eq!(g.cartesian_to_elliptical(Point::new(7.125, 0.0)), (0.0, 0.0));
        let (xi, eta) = g.cartesian_to_elliptical(Point::new(0.0, g.semi_minor()));
        assert_relative_eq!(xi, g.xi0(), max_relative = 1e-12);
        assert_relative_eq!(eta, FRAC_PI_2, max_relative = 1e-12);
        let (xi, eta) = g.cartesian_to_elliptical(Point::new(14.25, 0.0));
        assert_relative_eq!(xi, g.xi0(), max_relative = 1e-12);
        assert_eq!(eta, 0.0);
    }

    #[test]
    fn focal_segment_branch() {
        let g = EllipseGeometry::experimental();
        let (xi, eta) = g.cartesian_to_elliptical(Point::new(0.0, 0.0));
        assert_eq!(xi, 0.0);
        assert_relative_eq!(eta, FRAC_PI_2);
        let (xi, eta) = g.cartesian_to_elliptical(Point::new(-3.0, -0.0));
        assert_eq!(xi, 0.0);
        assert!(eta > 0.0);
        let (_, eta) = g.cartesian_to_elliptical(Point::new(-10.0, 0.0));
        assert_relative_eq!(eta, PI);
        let (_, eta) = g.cartesian_to_elliptical(Point::new(-10.0, -1e-9));
        assert!(eta < 0.0 && (eta + PI).abs() < 1e-9);
    }

    #[test]
    fn containment_is_boundary_inclusive() {
        let g = EllipseGeometry::experimental();
        assert!(g.contains(Point::new(0.0, 0.0)));
        assert!(g.contains(Point::new(14.25, 0.0)));
        assert!(!g.contains(Point::new(14.26, 0.0)));
        assert!(!g.contains(Point::new(0.0, 12.35)));
    }

    #[test]
    fn boundary_points_lie_on_the_ellipse() {
        let g = EllipseGeometry::experimental();
        for i in 0..100 {
            let eta = -PI + 2.0 * PI * i as f64 / 99.0;
            let p = g.elliptical_to_cartesian(g.xi0(), eta);
            let r = (p.x / g.semi_major()).powi(2) + (p.y / g.semi_minor()).powi(2);
            assert!((r - 1.0).abs() < 1e-12, "eta={eta}: {r}");
        }
    }

    #[test]
    fn round_trip_random_interior_points() {
        let g = EllipseGeometry::experimental();
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let mut checked = 0;
        while checked < 10_000 {
            let p = g.sample_interior(&mut rng);
            let (xi, eta) = g.cartesian_to_elliptical(p);
            if xi <= 1e-6 {
                continue;
            }
            assert!((-PI..=PI).contains(&eta));
            let q = g.elliptical_to_cartesian(xi, eta);
            let scale = p.x.hypot(p.y);
            assert!(p.distance(&q) <= 1e-10 * scale, "{p:?} -> {q:?}");
            checked += 1;
        }
    }

    #[test]
    fn sampling_moments_and_acceptance() {
        let g = EllipseGeometry::experimental();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let n = 100_000;
        let (mut sx, mut sy, mut sxx, mut syy, mut draws) = (0.0, 0.0, 0.0, 0.0, 0u64);
        for _ in 0..n {
            let (p, tries) = g.sample_interior_counted(&mut rng);
            assert!(g.contains(p));
            sx += p.x;
            sy += p.y;
            sxx += p.x * p.x;
            syy += p.y * p.y;
            draws += tries as u64;
        }
        let nf = n as f64;
        let (mx, my) = (sx / nf, sy / nf);
        let (sdx, sdy) = ((sxx / nf - mx * mx).sqrt(), (syy / nf - my * my).sqrt());
        assert!(mx.abs() < 3.0 * sdx / nf.sqrt());
        assert!(my.abs() < 3.0 * sdy / nf.sqrt());
        // Binomial acceptance at p = pi/4.
        let p = PI / 4.0;
        let rate = nf / draws as f64;
        let sigma = (p * (1.0 - p) / draws as f64).sqrt();
        assert!((rate - p).abs() < 3.0 * sigma, "rate {rate}");
    }

    /// Chi-squared uniformity over a 9x9 partition of the bounding box,
    /// with expected counts proportional to each cell's area inside the
    /// ellipse (computed by fine midpoint quadrature).
    #[test]
    fn sampling_passes_chi_squared() {
        let g = EllipseGeometry::experimental();
        let (a, b) = (g.semi_major(), g.semi_minor());
        let cells = 9;
        let sub = 200;
        let mut area = vec![0.0; cells * cells];
        for i in 0..cells * sub {
            for j in 0..cells * sub {
                let x = -a + 2.0 * a * (i as f64 + 0.5) / (cells * sub) as f64;
                let y = -b + 2.0 * b * (j as f64 + 0.5) / (cells * sub) as f64;
                if g.contains(Point::new(x, y)) {
                    area[(j / sub) * cells + i / sub] += 1.0;
                }
            }
        }
        let total: f64 = area.iter().sum();
        let n = 200_000;
        let mut counts = vec![0.0; cells * cells];
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for _ in 0..n {
            let p = g.sample_interior(&mut rng);
            let i = (((p.x + a) / (2.0 * a)) * cells as f64).floor().min(cells as f64 - 1.0) as usize;
            let j = (((p.y + b) / (2.0 * b)) * cells as f64).floor().min(cells as f64 - 1.0) as usize;
            counts[j * cells + i] += 1.0;
        }
        let mut chi2 = 0.0;
        let mut dof = 0;
        for (c, w) in counts.iter().zip(&area) {
            let expected = n as f64 * w / total;
            if expected >= 5.0 {
                chi2 += (c - expected).powi(2) / expected;
                dof += 1;
            }
        }
        dof -= 1;
        // Wilson-Hilferty upper 0.001 quantile (z = 3.0902).
        let k = dof as f64;
        let crit = k * (1.0 - 2.0 / (9.0 * k) + 3.0902 * (2.0 / (9.0 * k)).sqrt()).powi(3);
        assert!(chi2 < crit, "chi2 {chi2} >= {crit} with {dof} dof");
    }
}
